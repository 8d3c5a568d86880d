#ifndef UTIL_HASH_H
#define UTIL_HASH_H

#include <stdint.h>

#define FNV_OFFSET 14695981039346656037ULL
#define FNV_PRIME 1099511628211ULL

uint64_t hash_bytes(const unsigned char *data, unsigned long n);
uint64_t hash_string(const char *s);

#endif
