#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evodiff/expr.hpp"

namespace evodiff {

/// Optional admissibility certificate shipped with a model: weights and
/// constants for which the structural conditions are known in closed form.
struct ModelMeta {
    std::vector<double> b;     // intermediate-sum weights; empty when uncertified
    double L1 = 0.0;           // sum bound constant valid with b
    double K = 1.0;            // lower threshold for admissible a-weights
    int poly_degree = -1;      // certified polynomial growth degree; -1 unknown
    bool has_sum_certificate() const { return !b.empty(); }
};

/// Reaction system: bulk sources f and boundary flux rates g, both maps
/// R^m -> R^m given as expression strings in u1..um, plus diffusivities d.
/// Immutable after construction; eval_f/eval_g are pure.
struct ReactionModel {
    std::string name = "custom";
    std::size_t m = 0;
    std::vector<Expression> f;
    std::vector<Expression> g;
    std::vector<double> d;
    std::map<std::string, double> constants;
    ModelMeta meta;

    /// Builds a model from expression strings.  Throws ValidationError on
    /// size mismatches or non-positive diffusivities; parse errors carry
    /// column positions.
    static ReactionModel from_expressions(const std::vector<std::string>& f_texts,
                                          const std::vector<std::string>& g_texts,
                                          const std::vector<double>& d,
                                          const std::map<std::string, double>& constants = {});

    /// Built-in systems: "brusselator-surface" (constants alpha, beta),
    /// "reversible-reaction" (kf, kr), "example3" (alpha, beta).  Constant
    /// overrides replace the defaults; diffusivity overrides replace the
    /// all-ones default.
    static ReactionModel builtin(const std::string& name,
                                 const std::map<std::string, double>& constant_overrides = {},
                                 const std::vector<double>& d_override = {});
    static std::vector<std::string> builtin_names();

    /// Evaluates the bulk sources at z.  Negative entries are evaluated as
    /// written (solver overshoots must not be masked by clamping).
    void eval_f(std::span<const double> z, std::span<double> out) const;
    /// Evaluates the boundary flux rates at z.
    void eval_g(std::span<const double> z, std::span<double> out) const;
};

enum class Verdict { Pass, Fail, Inconclusive };

const char* to_string(Verdict v);

/// Outcome of a sampled structural-condition check.  A pass is
/// "inconclusive by sampling" (the conditions are global statements); a
/// fail always carries a witness point that reproduces the violation.
struct ConditionReport {
    std::string condition;
    Verdict verdict = Verdict::Inconclusive;
    std::string sample_domain;            // human-readable description
    std::vector<double> witness;          // violating input (empty unless fail)
    std::string witness_field;            // e.g. "g[2]"
    double witness_value = 0.0;
    std::map<std::string, double> fitted; // empirical constants
};

/// Quasi-positivity: on each face z_i = 0 of the nonnegative orthant
/// (restricted to [0,R]^m, low-discrepancy samples plus coordinate slices),
/// f_i and g_i must be >= -tol.
ConditionReport check_quasi_positivity(const ReactionModel& model, double R = 10.0,
                                       int samples = 10000, double tol = 1e-12);

/// Weighted intermediate sums: fits the smallest empirical L1 with
/// sum_j b_j f_j(z), sum_j b_j g_j(z) <= L1 (sum_j z_j + 1) on [0,R]^m.
/// Fails when the ratio keeps growing with the box radius (unbounded ray).
ConditionReport check_intermediate_sums(const ReactionModel& model, const std::vector<double>& b,
                                        double R = 10.0, int samples = 10000);

/// Linear-combination bound: for each weight vector a (last entry 1, others
/// >= K) fits L_a with sum_j a_j f_j, sum_j a_j g_j <= L_a (sum_j z_j + 1).
ConditionReport check_VL(const ReactionModel& model, double K,
                         const std::vector<std::vector<double>>& a_vectors, double R = 10.0,
                         int samples = 10000);

/// Polynomial growth: fits the smallest integer l (and constant K_fg) with
/// max_i |f_i(z)|, |g_i(z)| <= K_fg (sum_j z_j + 1)^l, judged stable across
/// the increasing radii in R_sequence.
ConditionReport check_polynomial_bound(const ReactionModel& model,
                                       const std::vector<double>& R_sequence = {2.0, 4.0, 8.0, 16.0},
                                       int samples = 4096);

} // namespace evodiff
