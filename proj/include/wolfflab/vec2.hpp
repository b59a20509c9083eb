#pragma once

#include <array>
#include <cmath>

namespace wolfflab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double c) { x *= c; y *= c; return *this; }
    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator*(double c, Vec2 a) { return a *= c; }
    friend constexpr Vec2 operator*(Vec2 a, double c) { return a *= c; }
    friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

using Point = Vec2;

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double norm2(const Vec2& a) { return dot(a, a); }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double dist2(const Point& a, const Point& b) { return norm2(a - b); }
inline double dist(const Point& a, const Point& b) { return norm(a - b); }

// Row-major 2x2 matrix.
struct Mat2 {
    double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 diagonal(double a, double b) { return {a, 0.0, 0.0, b}; }
    static constexpr Mat2 scalar(double c) { return {c, 0.0, 0.0, c}; }

    constexpr Mat2& operator+=(const Mat2& o) { xx += o.xx; xy += o.xy; yx += o.yx; yy += o.yy; return *this; }
    constexpr Mat2& operator-=(const Mat2& o) { xx -= o.xx; xy -= o.xy; yx -= o.yx; yy -= o.yy; return *this; }
    constexpr Mat2& operator*=(double c) { xx *= c; xy *= c; yx *= c; yy *= c; return *this; }
    friend constexpr Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
    friend constexpr Mat2 operator-(Mat2 a, const Mat2& b) { return a -= b; }
    friend constexpr Mat2 operator*(double c, Mat2 a) { return a *= c; }
    friend constexpr Vec2 operator*(const Mat2& m, const Vec2& v) { return {m.xx * v.x + m.xy * v.y, m.yx * v.x + m.yy * v.y}; }
    friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b)
    {
        return {a.xx * b.xx + a.xy * b.yx, a.xx * b.xy + a.xy * b.yy,
                a.yx * b.xx + a.yy * b.yx, a.yx * b.xy + a.yy * b.yy};
    }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;

    constexpr Mat2 transpose() const { return {xx, yx, xy, yy}; }
    constexpr double max_abs_entry() const
    {
        auto a = [](double v) { return v < 0 ? -v : v; };
        double m = a(xx);
        for (double v : {a(xy), a(yx), a(yy)})
            m = v > m ? v : m;
        return m;
    }
    constexpr double frobenius2() const { return xx * xx + xy * xy + yx * yx + yy * yy; }

    // Eigenvalues of the symmetric part, ascending.
    std::array<double, 2> sym_eigenvalues() const
    {
        const double a = xx, d = yy, b = 0.5 * (xy + yx);
        const double mean = 0.5 * (a + d);
        const double rad = std::hypot(0.5 * (a - d), b);
        return {mean - rad, mean + rad};
    }
};

} // namespace wolfflab
