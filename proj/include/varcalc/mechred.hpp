#pragma once
// Finite-dimensional Hamiltonian mechanics on T*R^n in double precision:
// flows, the SO(3) momentum map and reduction to T*R_{>0}.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "varcalc/expr.hpp"

namespace varcalc::mech {

// All numeric tolerances of the module.
struct Tolerances {
    double invariance = 1e-12;    // H(Oq, Op) = H(q, p) spot checks, rotation invariance of outputs
    double conservation = 1e-6;   // max |J(t) - J(0)| for rk4, dt = 1e-3 on [0, 10]
    double casimir = 2e-6;        // max |l^2(t) - l^2(0)|
    double commuting = 1e-5;      // reduce(flow) against reduced_flow(reduce)
    double free_flow = 1e-10;     // free particle against q0 + t p0 / m
    double circular = 1e-6;       // radius drift on circular Kepler orbits
    double period = 1e-5;         // harmonic period against 2 pi
};
const Tolerances& tolerances();

using Vec = std::vector<double>;
using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

struct PhasePoint {
    Vec q, p;
};

// V(r) and V'(r) of a central potential.
struct Radial {
    std::string name;
    std::function<double(double)> V, dV;
};

// H = |p|^2 / 2m + V(q) with V and its exact gradient.
struct MechSystem {
    std::string name;
    int dim = 3;
    double mass = 1;
    std::function<double(const Vec&)> V;
    std::function<Vec(const Vec&)> gradV;
    std::optional<Radial> radial;  // set for rotation-invariant systems
    std::vector<Mat3> generators;  // declared so(3) generators, acting by the cotangent lift

    double H(const PhasePoint& x) const;
};

MechSystem free_particle(int dim = 3, double mass = 1);
// Central potential in R^3 with so(3) symmetry; invariance is spot-checked on
// seeded random points and rotations.
MechSystem central(const Radial& v, double mass = 1);
Radial kepler(double k = 1);    // -k / r
Radial harmonic(double k = 1);  // k r^2 / 2
// V + eps q_axis; the declared symmetry is dropped.
MechSystem perturbed(const MechSystem& s, double eps, int axis = 0);

enum class Integrator { RK4, Leapfrog };
const char* integrator_name(Integrator i);

struct Trajectory {
    std::vector<double> t;
    std::vector<PhasePoint> x;
};

// Samples every stride-th step and the final state.
Trajectory flow(const MechSystem& s, const PhasePoint& x0, double t_final, double dt, Integrator method = Integrator::RK4,
                size_t stride = 1);
// Independent integrations run concurrently; results keep the input order.
std::vector<Trajectory> flow_all(const MechSystem& s, const std::vector<PhasePoint>& x0, double t_final, double dt,
                                 Integrator method = Integrator::RK4);

// J = p x q under the Euclidean identification of R^3 with its dual.
Vec3 momentum(const PhasePoint& x);
double casimir(const PhasePoint& x);  // l^2 = |p x q|^2

struct DriftReport {
    std::vector<double> J;  // per generator e_1, e_2, e_3
    double H = 0;
    double casimir = 0;
    double max_J() const;
};
DriftReport check_conservation(const MechSystem& s, const Trajectory& tr);

struct ReducedState {
    double r = 0, pr = 0, ell = 0;
    bool singular = false;  // l = 0: the stratum T*R / Z_2, not charted
};
ReducedState reduce_so3(const PhasePoint& x);

struct ReducedTrajectory {
    std::vector<double> t;
    std::vector<ReducedState> x;
};
// r' = pr / m, pr' = -V'(r) + l^2 / (m r^3), with l fixed.
ReducedTrajectory reduced_flow(const MechSystem& s, const ReducedState& x0, double t_final, double dt);

// Hat map R^3 -> so(3), v -> [v]_x.
Mat3 hat(const Vec3& v);
Vec3 vee(const Mat3& m);
Mat3 commutator(const Mat3& a, const Mat3& b);
Mat3 rotation(const Vec3& axis_angle);  // Rodrigues
Mat3 random_rotation(std::mt19937_64& rng);  // Haar distributed
PhasePoint rotate(const Mat3& O, const PhasePoint& x);

// <mu, [xi, eta]> with [xi, eta] the commutator, i.e. mu . (xi x eta).
template <class T>
T kks_pairing(const std::array<T, 3>& mu, const std::array<T, 3>& xi, const std::array<T, 3>& eta) {
    return mu[0] * (xi[1] * eta[2] - xi[2] * eta[1]) + mu[1] * (xi[2] * eta[0] - xi[0] * eta[2]) +
           mu[2] * (xi[0] * eta[1] - xi[1] * eta[0]);
}

// Largest deviation of reduce(flow(x0)) from reduced_flow(reduce(x0)) over the samples.
double commuting_defect(const MechSystem& s, const PhasePoint& x0, double t_final, double dt);

}  // namespace varcalc::mech
