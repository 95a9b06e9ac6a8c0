#include "evodiff/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evodiff/common.hpp"

namespace evodiff {

namespace {

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

// Van der Corput radical inverse; dimension j uses the j-th prime base.
double halton(std::size_t i, unsigned base) {
    double f = 1.0, r = 0.0;
    for (std::size_t n = i + 1; n > 0; n /= base) {
        f /= base;
        r += f * static_cast<double>(n % base);
    }
    return r;
}

std::vector<std::string> component_names(std::size_t m) {
    std::vector<std::string> names;
    names.reserve(m);
    for (std::size_t i = 1; i <= m; ++i) names.push_back(strfmt("u%zu", i));
    return names;
}

// Low-discrepancy points in [0,R]^m plus the deterministic extremes the
// fitted constants are often attained at (origin, corner, axis ends).
std::vector<std::vector<double>> sample_box(std::size_t m, double R, int samples) {
    std::vector<std::vector<double>> pts;
    pts.reserve(static_cast<std::size_t>(samples) + m + 2);
    for (int i = 0; i < samples; ++i) {
        std::vector<double> z(m);
        for (std::size_t j = 0; j < m; ++j) z[j] = R * halton(static_cast<std::size_t>(i), kPrimes[j]);
        pts.push_back(std::move(z));
    }
    pts.emplace_back(m, 0.0);
    pts.emplace_back(m, R);
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> z(m, 0.0);
        z[j] = R;
        pts.push_back(std::move(z));
    }
    return pts;
}

std::string describe_box(std::size_t m, double R, int samples) {
    return strfmt("[0,%g]^%zu, %d low-discrepancy samples + coordinate slices "
                  "(pass = inconclusive-by-sampling)",
                  R, m, samples);
}

struct WeightedRatioScan {
    double r_quarter = 0.0; // max ratio over ||z||_inf <= R/4
    double r_half = 0.0;    //                        <= R/2
    double r_full = 0.0;    //                        <= R
    std::vector<double> argmax;
    double argmax_value = 0.0;
};

// Scans max over samples of max(sum w_j f_j, sum w_j g_j) / (1 + sum z_j)
// on three nested boxes, to detect ratios that keep growing with radius.
WeightedRatioScan scan_weighted_ratio(const ReactionModel& model, const std::vector<double>& w,
                                      double R, int samples) {
    WeightedRatioScan scan;
    scan.r_quarter = scan.r_half = scan.r_full = -std::numeric_limits<double>::infinity();
    std::vector<double> fv(model.m), gv(model.m);
    for (const auto& z : sample_box(model.m, R, samples)) {
        model.eval_f(z, fv);
        model.eval_g(z, gv);
        double sf = 0.0, sg = 0.0, sz = 0.0, norm = 0.0;
        for (std::size_t j = 0; j < model.m; ++j) {
            sf += w[j] * fv[j];
            sg += w[j] * gv[j];
            sz += z[j];
            norm = std::max(norm, z[j]);
        }
        const double val = std::max(sf, sg);
        const double ratio = val / (1.0 + sz);
        if (norm <= 0.25 * R) scan.r_quarter = std::max(scan.r_quarter, ratio);
        if (norm <= 0.5 * R) scan.r_half = std::max(scan.r_half, ratio);
        if (ratio > scan.r_full) {
            scan.r_full = ratio;
            scan.argmax = z;
            scan.argmax_value = val;
        }
    }
    return scan;
}

// The ratio grows "materially" when it exceeds both an absolute floor and
// 1.3x the previous nested box; bounded ratios that merely approach an
// asymptote stay under this factor for doubling radii.
bool grew(double prev, double next) {
    return next > 1e-9 && next > 1.3 * std::max(prev, 1e-12);
}

} // namespace

const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

ReactionModel ReactionModel::from_expressions(const std::vector<std::string>& f_texts,
                                              const std::vector<std::string>& g_texts,
                                              const std::vector<double>& d,
                                              const std::map<std::string, double>& constants) {
    if (f_texts.empty() || f_texts.size() != g_texts.size())
        throw ValidationError(strfmt("model needs matching f/g lists (got %zu and %zu)",
                                     f_texts.size(), g_texts.size()));
    if (d.size() != f_texts.size())
        throw ValidationError(strfmt("model has %zu components but %zu diffusivities",
                                     f_texts.size(), d.size()));
    for (std::size_t i = 0; i < d.size(); ++i)
        if (!(d[i] > 0.0))
            throw ValidationError(strfmt("diffusivity d%zu must be positive, got %g", i + 1, d[i]));
    ReactionModel model;
    model.m = f_texts.size();
    model.d = d;
    model.constants = constants;
    const auto names = component_names(model.m);
    for (const auto& text : f_texts) model.f.push_back(Expression::parse(text, names, constants));
    for (const auto& text : g_texts) model.g.push_back(Expression::parse(text, names, constants));
    return model;
}

std::vector<std::string> ReactionModel::builtin_names() {
    return {"brusselator-surface", "reversible-reaction", "example3"};
}

ReactionModel ReactionModel::builtin(const std::string& name,
                                     const std::map<std::string, double>& constant_overrides,
                                     const std::vector<double>& d_override) {
    std::map<std::string, double> c;
    std::vector<std::string> f_texts, g_texts;
    std::size_t m = 0;
    if (name == "brusselator-surface") {
        // Surface Brusselator: autocatalysis happens on the boundary only.
        m = 2;
        c = {{"alpha", 1.0}, {"beta", 2.0}};
        f_texts = {"0", "0"};
        g_texts = {"alpha*u2 - u2^2*u1", "beta - (alpha + 1)*u2 + u2^2*u1"};
    } else if (name == "reversible-reaction") {
        // Surface-catalysed A + B <-> C; the weighted mass
        // (1/2)u1 + (1/2)u2 + u3 has identically zero net flux.
        m = 3;
        c = {{"kf", 1.0}, {"kr", 1.0}};
        f_texts = {"0", "0", "0"};
        g_texts = {"-kf*u1*u2 + kr*u3", "-kf*u1*u2 + kr*u3", "kf*u1*u2 - kr*u3"};
    } else if (name == "example3") {
        // Cubic boundary activation against a sextic sink; has no linear
        // intermediate-sums certificate, only the weighted (V_L)-type bound.
        m = 2;
        c = {{"alpha", 1.0}, {"beta", 1.0}};
        f_texts = {"0", "0"};
        g_texts = {"alpha*u1*u2^3 - u1*u2^2", "u1*u2^2 - beta*u1*u2^6"};
    } else {
        throw ValidationError(strfmt("unknown built-in model \"%s\" (known: brusselator-surface, "
                                     "reversible-reaction, example3)",
                                     name.c_str()));
    }
    for (const auto& [key, value] : constant_overrides) {
        if (!c.count(key))
            throw ValidationError(strfmt("model \"%s\" has no constant \"%s\"", name.c_str(), key.c_str()));
        c[key] = value;
    }
    std::vector<double> d(m, 1.0);
    if (!d_override.empty()) {
        if (d_override.size() != m)
            throw ValidationError(strfmt("model \"%s\" needs %zu diffusivities, got %zu",
                                         name.c_str(), m, d_override.size()));
        d = d_override;
    }
    ReactionModel model = from_expressions(f_texts, g_texts, d, c);
    model.name = name;
    if (name == "brusselator-surface") {
        model.meta.b = {1.0, 1.0};
        model.meta.L1 = c["beta"]; // g1 + g2 = beta - u2 <= beta
        model.meta.K = 1.0;
        model.meta.poly_degree = 3;
    } else if (name == "reversible-reaction") {
        model.meta.b = {0.5, 0.5, 1.0};
        model.meta.L1 = 0.0; // (1/2)g1 + (1/2)g2 + g3 = 0
        model.meta.K = 1.0;
        model.meta.poly_degree = 2;
    } else {
        model.meta.K = 1.0; // a g1 + g2 <= (a alpha / 4) u1 for a >= 1
        model.meta.poly_degree = 7;
    }
    return model;
}

void ReactionModel::eval_f(std::span<const double> z, std::span<double> out) const {
    for (std::size_t i = 0; i < m; ++i) out[i] = f[i].eval(z);
}

void ReactionModel::eval_g(std::span<const double> z, std::span<double> out) const {
    for (std::size_t i = 0; i < m; ++i) out[i] = g[i].eval(z);
}

ConditionReport check_quasi_positivity(const ReactionModel& model, double R, int samples,
                                       double tol) {
    if (!(R > 0.0)) throw ValidationError(strfmt("box radius must be positive, got %g", R));
    ConditionReport report;
    report.condition = "quasi-positivity";
    report.sample_domain = describe_box(model.m, R, samples);

    const std::size_t m = model.m;
    std::vector<double> fv(m), gv(m);
    // Points on the orthant faces: every subset of coordinates pinned to 0
    // (at least one), the free ones low-discrepancy in [0,R].  The main
    // budget goes to single-coordinate faces, where (V_QP) is sharp.
    std::vector<std::vector<double>> points;
    const auto base = sample_box(m, R, samples);
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& p : base) {
            auto z = p;
            z[i] = 0.0;
            points.push_back(std::move(z));
        }
    }
    if (m <= 6) {
        const int per_mask = std::max(16, samples / 64);
        for (unsigned mask = 1; mask < (1u << m); ++mask) {
            for (const auto& p : sample_box(m, R, per_mask)) {
                auto z = p;
                for (std::size_t j = 0; j < m; ++j)
                    if (mask & (1u << j)) z[j] = 0.0;
                points.push_back(std::move(z));
            }
        }
    }

    for (const auto& z : points) {
        model.eval_f(z, fv);
        model.eval_g(z, gv);
        for (std::size_t i = 0; i < m; ++i) {
            if (z[i] != 0.0) continue;
            const bool f_bad = fv[i] < -tol;
            if (f_bad || gv[i] < -tol) {
                report.verdict = Verdict::Fail;
                report.witness = z;
                report.witness_field = strfmt("%s[%zu]", f_bad ? "f" : "g", i + 1);
                report.witness_value = f_bad ? fv[i] : gv[i];
                return report;
            }
        }
    }
    report.verdict = Verdict::Pass;
    return report;
}

ConditionReport check_intermediate_sums(const ReactionModel& model, const std::vector<double>& b,
                                        double R, int samples) {
    if (b.size() != model.m)
        throw ValidationError(strfmt("weight vector has %zu entries, model has %zu", b.size(), model.m));
    for (std::size_t j = 0; j < b.size(); ++j)
        if (!(b[j] > 0.0))
            throw ValidationError(strfmt("weight b%zu must be positive, got %g", j + 1, b[j]));

    ConditionReport report;
    report.condition = "intermediate-sums";
    report.sample_domain = describe_box(model.m, R, samples);

    const auto scan = scan_weighted_ratio(model, b, R, samples);
    report.fitted["L1"] = std::max(0.0, scan.r_full);
    const bool outer = grew(scan.r_half, scan.r_full);
    const bool inner = grew(scan.r_quarter, scan.r_half);
    if (outer && inner) {
        report.verdict = Verdict::Fail;
        report.witness = scan.argmax;
        report.witness_field = "max(b.f, b.g)";
        report.witness_value = scan.argmax_value;
    } else if (outer) {
        report.verdict = Verdict::Inconclusive;
    } else {
        report.verdict = Verdict::Pass;
    }
    return report;
}

ConditionReport check_VL(const ReactionModel& model, double K,
                         const std::vector<std::vector<double>>& a_vectors, double R, int samples) {
    if (a_vectors.empty()) throw ValidationError("check_VL needs at least one weight vector");
    for (const auto& a : a_vectors) {
        if (a.size() != model.m)
            throw ValidationError(strfmt("weight vector has %zu entries, model has %zu",
                                         a.size(), model.m));
        if (a.back() != 1.0)
            throw ValidationError(strfmt("weight vector must end with 1, got %g", a.back()));
        for (std::size_t j = 0; j + 1 < a.size(); ++j)
            if (!(a[j] >= K))
                throw ValidationError(strfmt("weight a%zu=%g is below the threshold K=%g",
                                             j + 1, a[j], K));
    }

    ConditionReport report;
    report.condition = "linear-combination-bound";
    report.sample_domain = describe_box(model.m, R, samples);
    report.fitted["K"] = K;
    report.verdict = Verdict::Pass;

    for (std::size_t k = 0; k < a_vectors.size(); ++k) {
        const auto scan = scan_weighted_ratio(model, a_vectors[k], R, samples);
        report.fitted[strfmt("L_a%zu", k + 1)] = std::max(0.0, scan.r_full);
        const bool outer = grew(scan.r_half, scan.r_full);
        const bool inner = grew(scan.r_quarter, scan.r_half);
        if (outer && inner) {
            report.verdict = Verdict::Fail;
            report.witness = scan.argmax;
            report.witness_field = strfmt("a%zu-weighted sum", k + 1);
            report.witness_value = scan.argmax_value;
            return report;
        }
        if (outer && report.verdict == Verdict::Pass) report.verdict = Verdict::Inconclusive;
    }
    return report;
}

ConditionReport check_polynomial_bound(const ReactionModel& model,
                                       const std::vector<double>& R_sequence, int samples) {
    if (R_sequence.size() < 2)
        throw ValidationError("polynomial-bound check needs at least two radii");
    for (std::size_t k = 0; k + 1 < R_sequence.size(); ++k)
        if (!(R_sequence[k] > 0.0) || !(R_sequence[k] < R_sequence[k + 1]))
            throw ValidationError("radius sequence must be positive and increasing");

    ConditionReport report;
    report.condition = "polynomial-bound";
    report.sample_domain = strfmt("boxes [0,R]^%zu for R in {%g..%g}, %d samples each",
                                  model.m, R_sequence.front(), R_sequence.back(), samples);

    // Cache (magnitude, 1 + sum z) per sample so the degree sweep is cheap.
    struct Pt {
        double val, base;
        std::vector<double> z;
    };
    std::vector<std::vector<Pt>> per_radius;
    std::vector<double> fv(model.m), gv(model.m);
    for (const double R : R_sequence) {
        std::vector<Pt> pts;
        for (auto& z : sample_box(model.m, R, samples)) {
            model.eval_f(z, fv);
            model.eval_g(z, gv);
            double val = 0.0, sz = 0.0;
            for (std::size_t j = 0; j < model.m; ++j) {
                val = std::max({val, std::fabs(fv[j]), std::fabs(gv[j])});
                sz += z[j];
            }
            pts.push_back({val, 1.0 + sz, std::move(z)});
        }
        per_radius.push_back(std::move(pts));
    }

    constexpr int kMaxDegree = 12;
    for (int l = 0; l <= kMaxDegree; ++l) {
        std::vector<double> K_per_R;
        double K_fg = 0.0;
        for (const auto& pts : per_radius) {
            double K_R = 0.0;
            for (const auto& p : pts) K_R = std::max(K_R, p.val / std::pow(p.base, l));
            K_per_R.push_back(K_R);
            K_fg = std::max(K_fg, K_R);
        }
        // Stable across a radius doubling <=> the degree suffices; a degree
        // short by one doubles the ratio per doubling of R.
        bool stable = true;
        for (std::size_t k = 0; k + 1 < K_per_R.size(); ++k)
            if (K_per_R[k + 1] > 1.6 * K_per_R[k] + 1e-300) stable = false;
        if (stable) {
            report.verdict = Verdict::Pass;
            report.fitted["l"] = l;
            report.fitted["K_fg"] = K_fg;
            for (std::size_t k = 0; k < K_per_R.size(); ++k)
                report.fitted[strfmt("K_at_R%zu", k + 1)] = K_per_R[k];
            return report;
        }
    }

    report.verdict = Verdict::Fail;
    const auto& pts = per_radius.back();
    const auto worst = std::max_element(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) {
        return a.val / std::pow(a.base, kMaxDegree) < b.val / std::pow(b.base, kMaxDegree);
    });
    report.witness = worst->z;
    report.witness_field = "max(|f|, |g|)";
    report.witness_value = worst->val;
    return report;
}

} // namespace evodiff
