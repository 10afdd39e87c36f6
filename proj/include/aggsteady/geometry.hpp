#pragma once

namespace aggsteady {

// Heron quantity (R+r+1)(-R+r+1)(R-r+1)(R+r-1): 16 x squared area of the triangle with sides R, r, 1.
double heron_S(double R, double r);
// Foot s1(r;s) = (s^2 + r^2 - 1)/(2s) and half chord l(r;s) of the spheres |x| = r, |x - s e1| = 1.
double chord_foot(double r, double s);
double chord_half_length(double r, double s);
// c~_n = c_{n-1} omega_n / (2^{n-1} c_n^2) = n c_{n-1} / (2^{n-1} c_n)
double c_tilde(int n);

// A(r,1;s): volume of B(0,r) intersected with B(s e1, 1), by 1-D quadrature over x1 slices.
double ball_intersection(int n, double r, double s);
// Closed-form partials of A in s and r.
double ball_intersection_ds(int n, double r, double s);
double ball_intersection_dr(int n, double r, double s);

enum class BallCase { Disjoint = 1, Nested = 2, Crossing = 3, Boundary = 0 };
// Case of the pair of balls B(0,R), B(0,r) at unit interaction range.
BallCase ball_case(double R, double r);

// I(R,r) = c_n^{-2} R^{-n} r^{-n} |{|x| <= R, |y| <= r, |x - y| > 1}| and the
// second-derivative bundle of the convexity argument.
struct GeometryBundle {
    BallCase kind;
    double I;
    double S;
    double U, V, W;  // derivatives of R^{n+1} r^{n+1} dI
    double u, v, w;  // coefficients of n^2 d^2I/dt^2 = u alpha^2 + 2 v alpha beta + w beta^2
    double det() const { return u * w - v * v; }
};

double interaction_I(int n, double R, double r);
GeometryBundle interaction_geometry_nd(int n, double R, double r);

}  // namespace aggsteady
