#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pld/rng.hpp"

namespace pld {

// Gaussian sampling model for one user's candidate pool: n items whose
// losses follow N(mu1, sigma^2) (normal) and m items following
// N(mu2, sigma^2) (noisy), pool size k, resampling temperature tau.
struct TheoryParams {
    int n = 1;
    int m = 0;
    double mu1 = 1.0;
    double mu2 = 2.0;
    double sigma = 0.3;
    int k = 5;
    double tau = 1.0;

    // mu1 == mu2 is allowed so exchangeable-label checks can run; the
    // separation claim itself assumes mu1 < mu2.
    void validate() const {
        if (n < 1 || m < 0) throw std::invalid_argument("need n >= 1 and m >= 0");
        if (!(mu1 <= mu2)) throw std::invalid_argument("need mu1 <= mu2");
        if (!(mu1 > sigma && mu2 > sigma)) {
            throw std::invalid_argument("need mu1, mu2 > sigma");
        }
        if (k < 1) throw std::invalid_argument("need k >= 1");
        if (!(tau > 0.0)) throw std::invalid_argument("need tau > 0");
    }
};

// Derived terms of the closed form, after temperature scaling (the softmax
// over -l/tau is the softmax over losses drawn with mu' = mu/tau,
// sigma' = sigma/tau). alpha and beta are the mean exponentiated losses of
// normal and noisy items; c_mid is the midpoint constant used by the
// linearized form.
struct TheoryTerms {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double eta = 0.0;
    double big_gamma = 0.0;
    double chi = 0.0;
    double c_mid = 0.0;
};

inline std::pair<double, double> alpha_beta(const TheoryParams& p) {
    p.validate();
    const double s = p.sigma / p.tau;
    const double half_var = 0.5 * s * s;
    return {std::exp(-p.mu1 / p.tau + half_var), std::exp(-p.mu2 / p.tau + half_var)};
}

// Ratio beta/alpha = exp((mu1 - mu2) / tau); shrinking tau drives it to 0.
inline double beta_alpha_ratio(const TheoryParams& p) {
    p.validate();
    return std::exp((p.mu1 - p.mu2) / p.tau);
}

inline TheoryTerms theory_terms(const TheoryParams& p) {
    auto [alpha, beta] = alpha_beta(p);
    const double s = p.sigma / p.tau;
    TheoryTerms t;
    t.alpha = alpha;
    t.beta = beta;
    t.gamma = std::exp(s * s) - 1.0;
    const double nm = p.n + p.m;
    t.eta = (p.n * alpha + p.m * beta) / nm;
    t.big_gamma = ((p.n * alpha - p.m * beta) / nm) *
                  ((alpha * alpha + beta * beta) * (t.gamma + p.m / nm) + beta * beta) /
                  (t.eta * t.eta * t.eta);
    t.chi = t.gamma / nm * (p.n * alpha * alpha - p.m * beta * beta);
    t.c_mid = 0.5 * (alpha + beta);
    return t;
}

// Mean and variance of S = sum_{i=1..N} exp(-x_i) where
// N ~ Binomial(k, n/(n+m)) and x_i ~ N(mu, sigma^2) i.i.d. These are the
// exact moments of one side of the pool's softmax denominator.
inline std::pair<double, double> pool_sum_moments(int k, int n, int m, double mu,
                                                  double sigma) {
    if (n + m < 1) throw std::invalid_argument("need n + m >= 1");
    const double p = static_cast<double>(n) / (n + m);
    const double mean_e = std::exp(-mu + 0.5 * sigma * sigma);
    const double mean = k * p * mean_e;
    const double variance =
        k * p * std::exp(-2.0 * mu + sigma * sigma) * (std::exp(sigma * sigma) - p);
    return {mean, variance};
}

// Closed-form E[Lambda_normal - Lambda_noise]: exact (n-m)/(n+m) at k = 1;
// for k > 1, a second-order expansion of E[S_x / (S_x + S_y)] using the
// exact moments of the binomial-mixture sums, including their covariance
// Cov(S_x, S_y) = -k p q alpha beta.
inline double closed_form_gap(const TheoryParams& params) {
    params.validate();
    if (params.k == 1) {
        return static_cast<double>(params.n - params.m) / (params.n + params.m);
    }
    auto [alpha, beta] = alpha_beta(params);
    const double s = params.sigma / params.tau;
    const double gamma = std::exp(s * s) - 1.0;
    const double p = static_cast<double>(params.n) / (params.n + params.m);
    const double q = 1.0 - p;
    const double k = params.k;

    const double ex = k * p * alpha;
    const double ey = k * q * beta;
    const double ez = ex + ey;
    const double vx = k * p * alpha * alpha * (gamma + q);
    const double vy = k * q * beta * beta * (gamma + p);
    const double cxy = -k * p * q * alpha * beta;
    const double vz = vx + vy + 2.0 * cxy;
    const double cxz = vx + cxy;
    const double lambda_normal = ex / ez + ex * vz / (ez * ez * ez) - cxz / (ez * ez);
    return 2.0 * lambda_normal - 1.0;
}

// The same expectation evaluated with the coarser simplifications: the
// softmax denominator linearized around a constant pool summand C = c_mid,
// and the variance factor bounded instead of mixed. Diverges outside mild
// parameter regimes; kept for reference against the tighter form above.
inline double closed_form_gap_linearized(const TheoryParams& params) {
    params.validate();
    if (params.k == 1) {
        return static_cast<double>(params.n - params.m) / (params.n + params.m);
    }
    const TheoryTerms t = theory_terms(params);
    const double nm = params.n + params.m;
    const double k = params.k;
    const double main_term = (params.n * t.alpha - params.m * t.beta) / (nm * t.eta);
    const double fluctuation =
        t.big_gamma / k - (t.chi / (t.c_mid * t.c_mid)) * k / ((k - 1.0) * (k - 1.0));
    return main_term + fluctuation;
}

struct GapEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::int64_t trials = 0;
};

// Monte Carlo oracle for the same quantity: each trial draws k i.i.d.
// categories (normal with probability n/(n+m)), draws each loss from its
// Gaussian, forms the temperature-scaled softmax, and accumulates the
// normal-minus-noisy probability mass.
inline GapEstimate simulate_gap(const TheoryParams& params, std::int64_t trials,
                                std::int64_t seed) {
    params.validate();
    if (trials < 1) throw std::invalid_argument("need trials >= 1");
    auto rng = make_rng(static_cast<std::uint64_t>(seed), 0x91A);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double p_normal = static_cast<double>(params.n) / (params.n + params.m);

    std::vector<double> scaled(static_cast<size_t>(params.k));
    std::vector<char> is_normal(static_cast<size_t>(params.k));
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::int64_t t = 0; t < trials; ++t) {
        double best = -1e300;
        for (int i = 0; i < params.k; ++i) {
            const bool normal = unit(rng) < p_normal;
            const double mu = normal ? params.mu1 : params.mu2;
            const double loss = mu + params.sigma * gauss(rng);
            const double z = -loss / params.tau;
            scaled[static_cast<size_t>(i)] = z;
            is_normal[static_cast<size_t>(i)] = normal ? 1 : 0;
            best = std::max(best, z);
        }
        double total = 0.0;
        double normal_mass = 0.0;
        for (int i = 0; i < params.k; ++i) {
            const double w = std::exp(scaled[static_cast<size_t>(i)] - best);
            total += w;
            if (is_normal[static_cast<size_t>(i)]) normal_mass += w;
        }
        const double diff = 2.0 * normal_mass / total - 1.0;
        sum += diff;
        sum_sq += diff * diff;
    }
    GapEstimate out;
    out.trials = trials;
    out.estimate = sum / static_cast<double>(trials);
    if (trials > 1) {
        const double var =
            (sum_sq - sum * sum / static_cast<double>(trials)) / static_cast<double>(trials - 1);
        out.stderr_ = std::sqrt(std::max(0.0, var) / static_cast<double>(trials));
    }
    return out;
}

// ---- parameter sweeps ----

struct SweepSpec {
    std::vector<int> n_values{20, 50, 100};
    std::vector<int> m_values{2, 5, 10};
    std::vector<double> delta_mu_values{0.5, 1.0, 2.0};
    std::vector<double> sigma_values{0.2, 0.5};
    std::vector<int> k_values{3, 5, 10};
    std::vector<double> tau_values{0.5, 1.0};
    double mu1 = 1.0;
    std::int64_t trials = 100000;
};

struct SweepRow {
    TheoryParams params;
    double closed_form = 0.0;
    GapEstimate mc;
};

inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, std::int64_t seed) {
    std::vector<SweepRow> rows;
    std::int64_t point = 0;
    for (int n : spec.n_values)
        for (int m : spec.m_values)
            for (double dmu : spec.delta_mu_values)
                for (double sigma : spec.sigma_values)
                    for (int k : spec.k_values)
                        for (double tau : spec.tau_values) {
                            SweepRow row;
                            row.params = {n, m, spec.mu1, spec.mu1 + dmu, sigma, k, tau};
                            row.params.validate();
                            row.closed_form = closed_form_gap(row.params);
                            row.mc = simulate_gap(row.params, spec.trials,
                                                  static_cast<std::int64_t>(mix_seed(
                                                      static_cast<std::uint64_t>(seed),
                                                      static_cast<std::uint64_t>(point))));
                            rows.push_back(row);
                            ++point;
                        }
    return rows;
}

inline std::string sweep_csv_header() {
    return "n,m,mu1,mu2,sigma,k,tau,closed_form,mc_estimate,mc_stderr,trials";
}

inline std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
    std::string s = sweep_csv_header() + "\n";
    char buf[320];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g,%.9g,%d,%.9g,%.9g,%.9g,%.9g,%lld\n",
                      r.params.n, r.params.m, r.params.mu1, r.params.mu2, r.params.sigma,
                      r.params.k, r.params.tau, r.closed_form, r.mc.estimate, r.mc.stderr_,
                      static_cast<long long>(r.mc.trials));
        s += buf;
    }
    return s;
}

} // namespace pld
