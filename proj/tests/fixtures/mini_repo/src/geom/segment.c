#include "../../include/geom/point.h"

double segment_length(const struct Segment *s) {
    return point_dist(s->a, s->b);
}

double segment_span_x(const struct Segment *s) {
    double lo = s->a.x;
    double hi = s->b.x;
    if (lo > hi) {
        double t = lo;
        lo = hi;
        hi = t;
    }
    return hi - lo;
}

struct Point segment_center(const struct Segment *s) {
    return point_mid(s->a, s->b);
}
