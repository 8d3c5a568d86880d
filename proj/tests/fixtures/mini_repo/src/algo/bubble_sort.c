#include "../../include/algo/sort.h"

void bubble_sort(int *v, int n) {
    for (int i = 0; i < n; i++) {
        for (int j = 0; j + 1 < n - i; j++) {
            if (v[j] > v[j + 1]) {
                swap_ints(&v[j], &v[j + 1]);
            }
        }
    }
}
