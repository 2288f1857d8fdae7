#pragma once

// Forward-mode differentiation scalars.
//
// Dual<T> carries one directional derivative, Dual2<T> a two-direction
// second-order jet. Both are templated on the underlying scalar so they
// nest: Dual<Dual<double>> differentiates a quantity that is itself a
// first derivative, which is how exact Newton Jacobians of matrix-valued
// expressions are obtained here.

#include <cmath>
#include <stdexcept>

namespace ddg {

inline double to_double(double x) { return x; }

template <class T>
struct Dual {
    T v;  // value
    T d;  // directional derivative

    Dual() : v(0.0), d(0.0) {}
    Dual(double x) : v(x), d(0.0) {}  // NOLINT: implicit promotion of constants
    Dual(T value, T deriv) : v(value), d(deriv) {}
};

template <class T>
double to_double(const Dual<T>& x) {
    return to_double(x.v);
}

template <class T>
Dual<T> operator-(const Dual<T>& a) {
    return {-a.v, -a.d};
}

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
    return {a.v + b.v, a.d + b.d};
}
template <class T>
Dual<T> operator+(const Dual<T>& a, double b) { return a + Dual<T>(b); }
template <class T>
Dual<T> operator+(double a, const Dual<T>& b) { return Dual<T>(a) + b; }

template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
    return {a.v - b.v, a.d - b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, double b) { return a - Dual<T>(b); }
template <class T>
Dual<T> operator-(double a, const Dual<T>& b) { return Dual<T>(a) - b; }

template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
    return {a.v * b.v, a.v * b.d + a.d * b.v};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, double b) { return a * Dual<T>(b); }
template <class T>
Dual<T> operator*(double a, const Dual<T>& b) { return Dual<T>(a) * b; }

template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
    T inv = 1.0 / b.v;
    T q = a.v * inv;
    return {q, (a.d - q * b.d) * inv};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, double b) { return a / Dual<T>(b); }
template <class T>
Dual<T> operator/(double a, const Dual<T>& b) { return Dual<T>(a) / b; }

template <class T>
Dual<T>& operator+=(Dual<T>& a, const Dual<T>& b) { return a = a + b; }
template <class T>
Dual<T>& operator-=(Dual<T>& a, const Dual<T>& b) { return a = a - b; }

using std::cos;
using std::exp;
using std::sin;
using std::sqrt;

template <class T>
Dual<T> sin(const Dual<T>& a) {
    return {sin(a.v), cos(a.v) * a.d};
}
template <class T>
Dual<T> cos(const Dual<T>& a) {
    return {cos(a.v), -sin(a.v) * a.d};
}
template <class T>
Dual<T> exp(const Dual<T>& a) {
    T e = exp(a.v);
    return {e, e * a.d};
}
template <class T>
Dual<T> sqrt(const Dual<T>& a) {
    T r = sqrt(a.v);
    return {r, a.d / (2.0 * r)};
}

// Two-direction second-order jet: value, the two first derivatives and the
// mixed second derivative.
template <class T>
struct Dual2 {
    T v;
    T d1;
    T d2;
    T d12;

    Dual2() : v(0.0), d1(0.0), d2(0.0), d12(0.0) {}
    Dual2(double x) : v(x), d1(0.0), d2(0.0), d12(0.0) {}  // NOLINT
    Dual2(T value, T da, T db, T dab) : v(value), d1(da), d2(db), d12(dab) {}
};

template <class T>
double to_double(const Dual2<T>& x) {
    return to_double(x.v);
}

template <class T>
Dual2<T> operator-(const Dual2<T>& a) {
    return {-a.v, -a.d1, -a.d2, -a.d12};
}

template <class T>
Dual2<T> operator+(const Dual2<T>& a, const Dual2<T>& b) {
    return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2, a.d12 + b.d12};
}
template <class T>
Dual2<T> operator+(const Dual2<T>& a, double b) { return a + Dual2<T>(b); }
template <class T>
Dual2<T> operator+(double a, const Dual2<T>& b) { return Dual2<T>(a) + b; }

template <class T>
Dual2<T> operator-(const Dual2<T>& a, const Dual2<T>& b) {
    return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2, a.d12 - b.d12};
}
template <class T>
Dual2<T> operator-(const Dual2<T>& a, double b) { return a - Dual2<T>(b); }
template <class T>
Dual2<T> operator-(double a, const Dual2<T>& b) { return Dual2<T>(a) - b; }

template <class T>
Dual2<T> operator*(const Dual2<T>& a, const Dual2<T>& b) {
    return {a.v * b.v,
            a.d1 * b.v + a.v * b.d1,
            a.d2 * b.v + a.v * b.d2,
            a.d12 * b.v + a.d1 * b.d2 + a.d2 * b.d1 + a.v * b.d12};
}
template <class T>
Dual2<T> operator*(const Dual2<T>& a, double b) { return a * Dual2<T>(b); }
template <class T>
Dual2<T> operator*(double a, const Dual2<T>& b) { return Dual2<T>(a) * b; }

// Composition with a scalar function given by value, f' and f''.
template <class T>
Dual2<T> chain(const Dual2<T>& a, T f, T fp, T fpp) {
    return {f, fp * a.d1, fp * a.d2, fp * a.d12 + fpp * a.d1 * a.d2};
}

template <class T>
Dual2<T> inverse(const Dual2<T>& b) {
    T inv = 1.0 / b.v;
    return chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

template <class T>
Dual2<T> operator/(const Dual2<T>& a, const Dual2<T>& b) {
    return a * inverse(b);
}
template <class T>
Dual2<T> operator/(const Dual2<T>& a, double b) { return a / Dual2<T>(b); }
template <class T>
Dual2<T> operator/(double a, const Dual2<T>& b) { return Dual2<T>(a) / b; }

template <class T>
Dual2<T>& operator+=(Dual2<T>& a, const Dual2<T>& b) { return a = a + b; }
template <class T>
Dual2<T>& operator-=(Dual2<T>& a, const Dual2<T>& b) { return a = a - b; }

template <class T>
Dual2<T> sin(const Dual2<T>& a) {
    return chain(a, sin(a.v), cos(a.v), -sin(a.v));
}
template <class T>
Dual2<T> cos(const Dual2<T>& a) {
    return chain(a, cos(a.v), -sin(a.v), -cos(a.v));
}
template <class T>
Dual2<T> exp(const Dual2<T>& a) {
    T e = exp(a.v);
    return chain(a, e, e, e);
}
template <class T>
Dual2<T> sqrt(const Dual2<T>& a) {
    T r = sqrt(a.v);
    return chain(a, r, 0.5 / r, T(-0.25) / (r * a.v));
}

/// Integer power, valid for negative exponents away from zero. Works for
/// any scalar with *, / and construction from double.
template <class S>
S ipow(S base, int e) {
    if (e < 0) return S(1.0) / ipow(base, -e);
    S r(1.0);
    while (e > 0) {
        if (e & 1) r = r * base;
        base = base * base;
        e >>= 1;
    }
    return r;
}

}  // namespace ddg
