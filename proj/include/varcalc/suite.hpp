#pragma once
// Seeded randomized suites for the homotopy identities of the bicomplex.

#include <cstdint>
#include <random>

#include "varcalc/lagrangian.hpp"

namespace varcalc {

// Random polynomial local forms on a flat chart with two dynamic scalars u, v
// and a background b.
struct RandomForms {
    std::mt19937_64 rng;
    explicit RandomForms(uint64_t seed) : rng(seed) {}

    static Context chart(int dim);
    int uniform(int lo, int hi);
    Form form(const Context& ctx, int p, int q, int terms = 3, int deg = 3, int max_order = 2);
    Form constant_form(const Context& ctx, int q);  // field independent
};

const std::vector<std::string>& homotopy_identities();
// One identity on `cases` random forms in the given chart dimension; the first
// failing residual is reported.
Report check_homotopy_identity(const std::string& name, int dim, uint64_t seed, int cases);
// Every identity in dimensions 1..max_dim.
std::vector<Report> homotopy_suite(uint64_t seed, int cases, int max_dim = 3);

}  // namespace varcalc
