#include "varcalc/mechred.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace varcalc::mech {

namespace {

double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 as3(const Vec& v) { return {v[0], v[1], v[2]}; }

double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

void require3(const PhasePoint& x) {
    if (x.q.size() != 3 || x.p.size() != 3) throw Error("DimensionMismatch", "phase point is not in T*R^3");
}

bool finite(const PhasePoint& x) {
    auto ok = [](double v) { return std::isfinite(v); };
    return std::all_of(x.q.begin(), x.q.end(), ok) && std::all_of(x.p.begin(), x.p.end(), ok);
}

// (dq, dp) = (p / m, -grad V)
PhasePoint field(const MechSystem& s, const PhasePoint& x) {
    PhasePoint d{x.p, s.gradV(x.q)};
    for (auto& v : d.q) v /= s.mass;
    for (auto& v : d.p) v = -v;
    return d;
}

PhasePoint axpy(const PhasePoint& x, double h, const PhasePoint& d) {
    PhasePoint y = x;
    for (size_t i = 0; i < y.q.size(); ++i) {
        y.q[i] += h * d.q[i];
        y.p[i] += h * d.p[i];
    }
    return y;
}

PhasePoint rk4_step(const MechSystem& s, const PhasePoint& x, double h) {
    PhasePoint k1 = field(s, x);
    PhasePoint k2 = field(s, axpy(x, h / 2, k1));
    PhasePoint k3 = field(s, axpy(x, h / 2, k2));
    PhasePoint k4 = field(s, axpy(x, h, k3));
    PhasePoint y = x;
    for (size_t i = 0; i < y.q.size(); ++i) {
        y.q[i] += h / 6 * (k1.q[i] + 2 * k2.q[i] + 2 * k3.q[i] + k4.q[i]);
        y.p[i] += h / 6 * (k1.p[i] + 2 * k2.p[i] + 2 * k3.p[i] + k4.p[i]);
    }
    return y;
}

// kick, drift, kick
PhasePoint leapfrog_step(const MechSystem& s, const PhasePoint& x, double h) {
    PhasePoint y = x;
    Vec g = s.gradV(y.q);
    for (size_t i = 0; i < y.p.size(); ++i) y.p[i] -= h / 2 * g[i];
    for (size_t i = 0; i < y.q.size(); ++i) y.q[i] += h * y.p[i] / s.mass;
    g = s.gradV(y.q);
    for (size_t i = 0; i < y.p.size(); ++i) y.p[i] -= h / 2 * g[i];
    return y;
}

size_t steps_for(double t_final, double dt) {
    if (!(dt > 0)) throw Error("InvalidStep", "dt must be positive");
    if (t_final < 0) throw Error("InvalidStep", "t_final must be non-negative");
    return static_cast<size_t>(std::llround(t_final / dt));
}

Mat3 mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

Vec apply(const Mat3& O, const Vec& v) {
    Vec w(3, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) w[i] += O[i][j] * v[j];
    return w;
}

}  // namespace

const Tolerances& tolerances() {
    static const Tolerances t;
    return t;
}

double MechSystem::H(const PhasePoint& x) const { return dot(x.p, x.p) / (2 * mass) + V(x.q); }

MechSystem free_particle(int dim, double mass) {
    MechSystem s;
    s.name = "free";
    s.dim = dim;
    s.mass = mass;
    s.V = [](const Vec&) { return 0.0; };
    s.gradV = [](const Vec& q) { return Vec(q.size(), 0.0); };
    if (dim == 3) {
        s.radial = Radial{"free", [](double) { return 0.0; }, [](double) { return 0.0; }};
        for (int a = 0; a < 3; ++a) {
            Vec3 e{};
            e[a] = 1;
            s.generators.push_back(hat(e));
        }
    }
    return s;
}

Radial kepler(double k) {
    return {"kepler", [k](double r) { return -k / r; }, [k](double r) { return k / (r * r); }};
}

Radial harmonic(double k) {
    return {"harmonic", [k](double r) { return k * r * r / 2; }, [k](double r) { return k * r; }};
}

MechSystem central(const Radial& v, double mass) {
    MechSystem s;
    s.name = v.name;
    s.mass = mass;
    s.radial = v;
    s.V = [v](const Vec& q) { return v.V(std::sqrt(dot(q, q))); };
    s.gradV = [v](const Vec& q) {
        double r = std::sqrt(dot(q, q));
        if (r == 0) throw Error("OriginSingularity", "gradient of a central potential at the origin");
        double k = v.dV(r) / r;
        return Vec{k * q[0], k * q[1], k * q[2]};
    };
    for (int a = 0; a < 3; ++a) {
        Vec3 e{};
        e[a] = 1;
        s.generators.push_back(hat(e));
    }
    std::mt19937_64 rng(0);
    std::normal_distribution<double> n;
    for (int k = 0; k < 32; ++k) {
        PhasePoint x{{n(rng), n(rng), n(rng)}, {n(rng), n(rng), n(rng)}};
        Mat3 O = random_rotation(rng);
        double h0 = s.H(x), h1 = s.H(rotate(O, x));
        if (std::abs(h1 - h0) > tolerances().invariance * std::max(1.0, std::abs(h0)))
            throw Error("NotInvariant", "Hamiltonian is not invariant under the declared rotations");
    }
    return s;
}

MechSystem perturbed(const MechSystem& s, double eps, int axis) {
    if (axis < 0 || axis >= s.dim) throw Error("DimensionMismatch", "perturbation axis out of range");
    MechSystem p = s;
    p.name = s.name + "+perturbation";
    p.radial.reset();
    p.generators.clear();
    auto V = s.V;
    auto gradV = s.gradV;
    p.V = [V, eps, axis](const Vec& q) { return V(q) + eps * q[axis]; };
    p.gradV = [gradV, eps, axis](const Vec& q) {
        Vec g = gradV(q);
        g[axis] += eps;
        return g;
    };
    return p;
}

const char* integrator_name(Integrator i) { return i == Integrator::RK4 ? "rk4" : "leapfrog"; }

Trajectory flow(const MechSystem& s, const PhasePoint& x0, double t_final, double dt, Integrator method, size_t stride) {
    if (static_cast<int>(x0.q.size()) != s.dim || x0.p.size() != x0.q.size())
        throw Error("DimensionMismatch", "initial state does not match the system dimension");
    size_t n = steps_for(t_final, dt);
    Trajectory tr;
    stride = std::max<size_t>(stride, 1);
    tr.t.reserve(n / stride + 2);
    tr.x.reserve(n / stride + 2);
    tr.t.push_back(0);
    tr.x.push_back(x0);
    PhasePoint x = x0;
    for (size_t k = 1; k <= n; ++k) {
        x = method == Integrator::RK4 ? rk4_step(s, x, dt) : leapfrog_step(s, x, dt);
        if (!finite(x)) throw Error("NonFiniteState", "state blew up at t = " + std::to_string(k * dt));
        if (k % stride && k != n) continue;
        tr.t.push_back(k * dt);
        tr.x.push_back(x);
    }
    return tr;
}

std::vector<Trajectory> flow_all(const MechSystem& s, const std::vector<PhasePoint>& x0, double t_final, double dt,
                                 Integrator method) {
    std::vector<std::future<Trajectory>> jobs;
    for (const auto& x : x0)
        jobs.push_back(std::async(std::launch::async, [&, x] { return flow(s, x, t_final, dt, method); }));
    std::vector<Trajectory> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

Vec3 momentum(const PhasePoint& x) {
    require3(x);
    return cross(as3(x.p), as3(x.q));
}

double casimir(const PhasePoint& x) {
    Vec3 J = momentum(x);
    return J[0] * J[0] + J[1] * J[1] + J[2] * J[2];
}

double DriftReport::max_J() const { return J.empty() ? 0.0 : *std::max_element(J.begin(), J.end()); }

DriftReport check_conservation(const MechSystem& s, const Trajectory& tr) {
    DriftReport d;
    if (tr.x.empty()) return d;
    const PhasePoint& x0 = tr.x.front();
    double h0 = s.H(x0);
    bool three = s.dim == 3;
    Vec3 J0{};
    double c0 = 0;
    if (three) {
        J0 = momentum(x0);
        c0 = casimir(x0);
        d.J.assign(3, 0.0);
    }
    for (const auto& x : tr.x) {
        d.H = std::max(d.H, std::abs(s.H(x) - h0));
        if (!three) continue;
        Vec3 J = momentum(x);
        for (int a = 0; a < 3; ++a) d.J[a] = std::max(d.J[a], std::abs(J[a] - J0[a]));
        d.casimir = std::max(d.casimir, std::abs(casimir(x) - c0));
    }
    return d;
}

ReducedState reduce_so3(const PhasePoint& x) {
    require3(x);
    Vec3 q = as3(x.q), p = as3(x.p);
    ReducedState r;
    r.r = norm(q);
    if (r.r == 0) throw Error("OriginSingularity", "q = 0 has no radial chart");
    r.pr = (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]) / r.r;
    r.ell = norm(cross(p, q));
    r.singular = r.ell <= tolerances().invariance * std::max(1.0, r.r * norm(p));
    return r;
}

ReducedTrajectory reduced_flow(const MechSystem& s, const ReducedState& x0, double t_final, double dt) {
    if (!s.radial) throw Error("NotInvariant", "system has no central potential");
    if (x0.r <= 0) throw Error("OriginSingularity", "r must be positive");
    if (x0.singular || x0.ell <= 0) throw Error("OriginSingularity", "l = 0 lies on the singular stratum");
    const Radial& v = *s.radial;
    const double m = s.mass, l2 = x0.ell * x0.ell;
    auto rhs = [&](double r, double pr) {
        if (!(r > 0)) throw Error("OriginSingularity", "reduced trajectory reached r = 0");
        return std::pair<double, double>{pr / m, -v.dV(r) + l2 / (m * r * r * r)};
    };
    size_t n = steps_for(t_final, dt);
    ReducedTrajectory tr;
    tr.t.push_back(0);
    tr.x.push_back(x0);
    double r = x0.r, pr = x0.pr;
    for (size_t k = 1; k <= n; ++k) {
        auto [a1, b1] = rhs(r, pr);
        auto [a2, b2] = rhs(r + dt / 2 * a1, pr + dt / 2 * b1);
        auto [a3, b3] = rhs(r + dt / 2 * a2, pr + dt / 2 * b2);
        auto [a4, b4] = rhs(r + dt * a3, pr + dt * b3);
        r += dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4);
        pr += dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4);
        if (!std::isfinite(r) || !std::isfinite(pr)) throw Error("NonFiniteState", "reduced state blew up");
        tr.t.push_back(k * dt);
        tr.x.push_back({r, pr, x0.ell, false});
    }
    return tr;
}

Mat3 hat(const Vec3& v) {
    Mat3 m{};
    m[0][1] = -v[2];
    m[0][2] = v[1];
    m[1][0] = v[2];
    m[1][2] = -v[0];
    m[2][0] = -v[1];
    m[2][1] = v[0];
    return m;
}

Vec3 vee(const Mat3& m) { return {m[2][1], m[0][2], m[1][0]}; }

Mat3 commutator(const Mat3& a, const Mat3& b) {
    Mat3 ab = mul(a, b), ba = mul(b, a);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) ab[i][j] -= ba[i][j];
    return ab;
}

Mat3 rotation(const Vec3& w) {
    double th = norm(w);
    Mat3 R{};
    for (int i = 0; i < 3; ++i) R[i][i] = 1;
    if (th == 0) return R;
    Mat3 K = hat({w[0] / th, w[1] / th, w[2] / th});
    Mat3 K2 = mul(K, K);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) R[i][j] += std::sin(th) * K[i][j] + (1 - std::cos(th)) * K2[i][j];
    return R;
}

Mat3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    double a = n(rng), b = n(rng), c = n(rng), d = n(rng);
    double s = std::sqrt(a * a + b * b + c * c + d * d);
    a /= s, b /= s, c /= s, d /= s;
    return Mat3{{{a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
                 {2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)},
                 {2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d}}};
}

PhasePoint rotate(const Mat3& O, const PhasePoint& x) {
    require3(x);
    return {apply(O, x.q), apply(O, x.p)};
}

double commuting_defect(const MechSystem& s, const PhasePoint& x0, double t_final, double dt) {
    Trajectory full = flow(s, x0, t_final, dt);
    ReducedTrajectory red = reduced_flow(s, reduce_so3(x0), t_final, dt);
    double worst = 0;
    for (size_t k = 0; k < full.x.size(); ++k) {
        ReducedState a = reduce_so3(full.x[k]);
        const ReducedState& b = red.x[k];
        worst = std::max({worst, std::abs(a.r - b.r), std::abs(a.pr - b.pr), std::abs(a.ell - b.ell)});
    }
    return worst;
}

}  // namespace varcalc::mech
