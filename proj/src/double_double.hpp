#pragma once

// Minimal double-double arithmetic (Dekker / Knuth error-free transforms).
// Relative accuracy is about 2^-104, enough to round dot products and norms once.

#include <cmath>

namespace qimrag::detail {

struct DoubleDouble {
    double hi = 0.0;
    double lo = 0.0;

    double to_double() const { return hi + lo; }
};

inline DoubleDouble two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

inline DoubleDouble fast_two_sum(double a, double b) {
    const double s = a + b;
    return {s, b - (s - a)};
}

inline DoubleDouble two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

inline DoubleDouble add(DoubleDouble a, DoubleDouble b) {
    DoubleDouble s = two_sum(a.hi, b.hi);
    DoubleDouble t = two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = fast_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return fast_two_sum(s.hi, s.lo);
}

inline DoubleDouble mul(DoubleDouble a, DoubleDouble b) {
    DoubleDouble p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return fast_two_sum(p.hi, p.lo);
}

inline DoubleDouble div(DoubleDouble a, DoubleDouble b) {
    const double q1 = a.hi / b.hi;
    DoubleDouble r = add(a, mul({-q1, 0.0}, b));
    const double q2 = r.hi / b.hi;
    r = add(r, mul({-q2, 0.0}, b));
    const double q3 = r.hi / b.hi;
    DoubleDouble q = fast_two_sum(q1, q2);
    return add(q, {q3, 0.0});
}

// One Newton step on the hardware square root.
inline DoubleDouble sqrt(DoubleDouble a) {
    if (a.hi <= 0.0) {
        return {0.0, 0.0};
    }
    const double x = std::sqrt(a.hi);
    const DoubleDouble x2 = two_prod(x, x);
    const DoubleDouble residual = add(a, {-x2.hi, -x2.lo});
    return fast_two_sum(x, residual.hi / (2.0 * x));
}

}  // namespace qimrag::detail
