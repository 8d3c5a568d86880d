#include "../../include/algo/sort.h"

void shell_sort(int *v, int n) {
    for (int gap = n / 2; gap > 0; gap /= 2) {
        for (int i = gap; i < n; i++) {
            int tmp = v[i];
            int j = i;
            while (j >= gap && v[j - gap] > tmp) {
                v[j] = v[j - gap];
                j -= gap;
            }
            v[j] = tmp;
        }
    }
}
