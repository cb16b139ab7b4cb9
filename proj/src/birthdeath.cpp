#include "glab/birthdeath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace glab {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double log_sum_exp(const RVec& x) {
    double m = x.maxCoeff();
    return m + std::log((x.array() - m).exp().sum());
}

// geometric tail beyond the last term from the observed ratio of the final terms
double geometric_tail(const std::vector<double>& terms) {
    const size_t n = terms.size();
    if (n < 6) return 0.0;
    double rho = 0.0;
    for (size_t i = n - 5; i < n; ++i) {
        if (terms[i - 1] <= 0) continue;
        rho = std::max(rho, terms[i] / terms[i - 1]);
    }
    if (rho >= 1.0) return inf;
    return terms.back() * rho / (1.0 - rho);
}

} // namespace

BirthDeathRates bd_rates(const std::vector<double>& h, const FilterFunction& f, int n_max) {
    if (f.kind != FilterKind::metropolis)
        throw PreconditionError("bd_rates: the gap theorem uses the Metropolis filter", "f metropolis");
    if (n_max < 10) throw PreconditionError("bd_rates: n_max must be >= 10", "n_max >= 10");
    if (static_cast<int>(h.size()) < n_max + 2)
        throw PreconditionError("bd_rates: h must be tabulated on 0..n_max+1", "h on 0..n_max+1");
    BirthDeathRates r;
    r.n_max = n_max;
    r.beta = f.beta;
    r.energies.resize(n_max + 2);
    for (int n = 0; n <= n_max + 1; ++n) r.energies(n) = h[n];
    r.mu_plus.resize(n_max + 1);
    r.mu_minus.resize(n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        r.mu_plus(n) = std::sqrt(n + 1.0) * f(h[n + 1] - h[n]).real();
        r.mu_minus(n) = n == 0 ? 0.0 : std::sqrt(double(n)) * f(h[n - 1] - h[n]).real();
    }
    RVec lw = -f.beta * r.energies.head(n_max + 1);
    r.gibbs_log_weights = lw.array() - log_sum_exp(lw);
    return r;
}

Condition0 check_condition0(const BirthDeathRates& r) {
    Condition0 c;
    c.value = inf;
    for (int n = 1; n <= r.n_max; ++n) {
        double dm = r.mu_plus(n) - r.mu_plus(0);
        double v = r.mu_minus(n) * r.mu_minus(n) + dm * dm;
        if (v < c.value) { c.value = v; c.argmin = n; }
    }
    c.monotone_tail = true;
    for (int n = std::max(1, r.n_max - 20); n < r.n_max; ++n)
        if (r.mu_minus(n + 1) < r.mu_minus(n)) c.monotone_tail = false;
    return c;
}

Separation estimate_separation(const RVec& E, int n0, int s_max) {
    Separation sp;
    sp.n0 = n0;
    const int n = static_cast<int>(E.size());
    for (int s = 1; s <= s_max; ++s) {
        double dmin = inf;
        for (int m = n0; m + s < n; ++m) dmin = std::min(dmin, E(m + s) - E(m));
        if (dmin > 0) {
            sp.s = s;
            sp.delta = dmin;
            sp.ok = true;
            break;
        }
    }
    double de = 0.0;
    for (int j = 0; j <= std::min(2 * n0, n - 1); ++j)
        for (int m = 0; m <= std::min(2 * n0, n - 1); ++m) de = std::max(de, std::abs(E(j) - E(m)));
    sp.Delta_E = de;
    return sp;
}

std::vector<double> default_gamma_grid(double beta, double delta, int s) {
    const double lo = std::exp(-beta * delta / s), eps = 1e-3;
    const double a = lo + eps * (1.0 - lo), b = 1.0 - eps * (1.0 - lo);
    std::vector<double> g(16);
    for (int i = 0; i < 16; ++i) g[i] = std::exp(std::log(a) + (std::log(b) - std::log(a)) * i / 15.0);
    return g;
}

double fit_c(const BirthDeathRates& r, int k_max, int* am, int* ak, double* tail_out) {
    const double beta = r.beta;
    const RVec& E = r.energies;
    double best = 0.0, worst_tail = 0.0;
    for (int k = 1; k <= k_max; ++k)
        for (int m = 0; m < r.n_max - k_max; ++m) {
            std::vector<double> terms;
            const double den = r.mu_plus(m) * r.mu_plus(m + k);
            for (int j = m + 1; j + k <= r.n_max; ++j)
                terms.push_back(std::exp(-beta * (E(j) + E(j + k) - E(m) - E(m + k)) / 2.0) / den);
            double s = 0.0;
            for (double t : terms) s += t;
            double tail = geometric_tail(terms);
            s += tail;
            worst_tail = std::max(worst_tail, tail);
            if (s > best) {
                best = s;
                if (am) *am = m;
                if (ak) *ak = k;
            }
        }
    if (tail_out) *tail_out = worst_tail;
    return best;
}

double fit_d(const BirthDeathRates& r, double gamma, int k_max, int* am, int* ak, double* tail_out) {
    const double beta = r.beta, lg = std::log(gamma);
    const RVec& E = r.energies;
    double best = 0.0, worst_tail = 0.0;
    for (int k = 1; k <= k_max; ++k)
        for (int m = 0; m < r.n_max - k_max; ++m) {
            std::vector<double> terms;
            const double den = r.mu_plus(m) * r.mu_plus(m + k);
            for (int j = m + 1; j + k <= r.n_max; ++j)
                terms.push_back(std::exp(-(j - m) * lg - beta * (E(j) + E(j + k) - E(m) - E(m + k)) / 2.0) *
                                r.mu_plus(j) * r.mu_plus(j + k) / den);
            double s = 0.0;
            for (double t : terms) s += t;
            double tail = geometric_tail(terms);
            if (std::isinf(tail) || !std::isfinite(s)) {
                if (tail_out) *tail_out = inf;
                return inf;
            }
            s += tail;
            worst_tail = std::max(worst_tail, tail);
            if (s > best) {
                best = s;
                if (am) *am = m;
                if (ak) *ak = k;
            }
        }
    if (tail_out) *tail_out = worst_tail;
    return best;
}

double lower_bound_formula(double c, double d, double gamma, const BirthDeathRates& r) {
    if (!std::isfinite(c) || !std::isfinite(d)) return 0.0;
    double first = 1.0 / (c * (d + 1.0 + gamma / (1.0 - gamma)));
    double second = inf;
    for (int n = 1; n <= r.n_max; ++n) {
        double dm = r.mu_plus(n) - r.mu_plus(0);
        double num = r.mu_minus(n) * r.mu_minus(n) + dm * dm;
        double den = 1.0 + c * r.mu_plus(0) * r.mu_plus(n) * (1.0 + (d + 1.0) / gamma);
        second = std::min(second, num / den);
    }
    return std::min(first, second);
}

double gap_lower_bound(const GapCertificate& cert, const BirthDeathRates& r) {
    return lower_bound_formula(cert.c, cert.d, cert.gamma, r);
}

GapCertificate fit_constants(const BirthDeathRates& r, std::vector<double> gammas, int k_max) {
    if (k_max < 1 || k_max >= r.n_max / 2)
        throw PreconditionError("fit_constants: k_max out of range", "1 <= k_max < n_max/2");
    Separation sp = estimate_separation(r.energies);
    if (gammas.empty()) {
        if (!sp.ok) throw PreconditionError("fit_constants: no energy separation found for the gamma grid", "E_{m+s}-E_m >= delta");
        gammas = default_gamma_grid(r.beta, sp.delta, sp.s);
    }
    GapCertificate cert;
    double c_tail = 0.0;
    cert.c = fit_c(r, k_max, &cert.c_arg_m, &cert.c_arg_k, &c_tail);
    cert.cond0 = check_condition0(r).value;
    bool any = false;
    for (double g : gammas) {
        if (!(g > 0 && g < 1)) continue;
        int am = 0, ak = 0;
        double tail = 0.0;
        double d = fit_d(r, g, k_max, &am, &ak, &tail);
        if (!std::isfinite(d)) continue;
        double lb = lower_bound_formula(cert.c, d, g, r);
        if (!any || lb > cert.lower_bound) {
            any = true;
            cert.gamma = g;
            cert.d = d;
            cert.d_arg_m = am;
            cert.d_arg_k = ak;
            cert.lower_bound = lb;
            cert.residuals["d_tail"] = tail;
        }
    }
    if (!any) throw std::runtime_error("fit_constants: condition 2 not certifiable at this truncation");
    cert.residuals["c_tail"] = c_tail;
    cert.residuals["cond0"] = cert.cond0;
    cert.verified = cert.cond0 > 0 && std::isfinite(cert.c) && std::isfinite(cert.d);
    return cert;
}

// ---- explicit constants ----

double C_gamma_gamma_tilde(double gamma, double gamma_tilde) {
    const double x = gamma / gamma_tilde;
    // sup over j > m, k >= 0 is attained at m = k = 0: x^r (r+1), unimodal in r
    const double peak = 1.0 / (-std::log(x)) - 1.0;
    double best = 0.0;
    for (int r = 1;; ++r) {
        double v = std::pow(x, r) * (r + 1.0);
        best = std::max(best, v);
        if (r > peak && r > 1 && v < best) break;
    }
    return best;
}

ExplicitKappa explicit_kappa(double beta, int n0, double delta, int s, double Delta_E, double gamma) {
    const double lo = std::exp(-beta * delta / s);
    if (!(gamma > lo && gamma < 1.0))
        throw PreconditionError("explicit_kappa: gamma must lie in (exp(-beta delta/s), 1)", "gamma in (e^{-beta delta/s},1)");
    ExplicitKappa k;
    const double pre = (n0 + 1.0) * std::exp(beta * Delta_E) * std::exp(beta * delta);
    k.c_tilde = pre / (1.0 - lo);
    k.gamma_tilde = 0.5 * (gamma + 1.0);
    k.q = lo / k.gamma_tilde;
    if (!(k.q < 1.0)) throw PreconditionError("explicit_kappa: q >= 1, geometric series diverges", "q < 1");
    k.C_gamma = C_gamma_gamma_tilde(gamma, k.gamma_tilde);
    k.d_tilde = k.C_gamma * pre * std::pow(k.gamma_tilde, -n0) / (1.0 - k.q);
    return k;
}

ENProbe en_equivalence_probe(const std::vector<double>& E, double beta, int s, double delta, int n0) {
    const int n = static_cast<int>(E.size());
    for (int m = n0; m < n; ++m)
        if (m + 1 < n && E[m + 1] < E[m])
            throw PreconditionError("en_equivalence_probe: E must be non-decreasing beyond n0", "E non-decreasing");
    ENProbe p;
    p.item1 = true;
    for (int m = n0; m + s < n; ++m)
        if (E[m + s] - E[m] < delta) { p.item1 = false; p.item1_fail_index = m; break; }
    double de = 0.0;
    for (int j = 0; j <= std::min(2 * n0, n - 1); ++j)
        for (int m = 0; m <= std::min(2 * n0, n - 1); ++m) de = std::max(de, std::abs(E[j] - E[m]));
    p.bound = (n0 + 1.0) * std::exp(beta * de) * std::exp(beta * delta) / (1.0 - std::exp(-beta * delta / s));
    for (int m = 0; m <= n / 2; ++m) {
        double sum = 0.0;
        for (int j = m; j < n; ++j) sum += std::exp(-beta * (E[j] - E[m]));
        p.measured_sup = std::max(p.measured_sup, sum);
    }
    p.item3 = p.measured_sup <= p.bound;
    return p;
}

} // namespace glab
