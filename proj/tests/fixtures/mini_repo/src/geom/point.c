#include <math.h>
#include "../../include/geom/point.h"

double point_dist(struct Point p, struct Point q) {
    double dx = p.x - q.x;
    double dy = p.y - q.y;
    return sqrt(GEOM_SQ(dx) + GEOM_SQ(dy));
}

struct Point point_mid(struct Point p, struct Point q) {
    struct Point m;
    m.x = (p.x + q.x) / 2.0;
    m.y = (p.y + q.y) / 2.0;
    return m;
}

int point_equal(struct Point p, struct Point q) {
    if (point_dist(p, q) < GEOM_EPS) {
        return 1;
    }
    return 0;
}
