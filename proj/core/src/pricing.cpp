#include "jointcal/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jointcal {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double norm_pdf(double x) {
    constexpr double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

void check_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw std::invalid_argument(what);
}

void check_common_inputs(const MarketEnv& env, double strike, double maturity) {
    env.validate();
    check_finite(strike, "pricing: strike must be finite");
    check_finite(maturity, "pricing: maturity must be finite");
    if (strike <= 0.0) throw std::invalid_argument("pricing: strike must be positive");
    if (maturity <= 0.0)
        throw std::invalid_argument("pricing: maturity must be positive");
}

}  // namespace

void PricerSettings::validate() const {
    if (fourier_grid_size < 64 ||
        (fourier_grid_size & (fourier_grid_size - 1)) != 0)
        throw std::invalid_argument(
            "PricerSettings: fourier_grid_size must be a power of two >= 64");
    if (!(std::isfinite(truncation_width) && truncation_width >= 6.0))
        throw std::invalid_argument(
            "PricerSettings: truncation_width must be at least 6 stdevs");
    if (quadrature != "cos")
        throw std::invalid_argument("PricerSettings: unsupported quadrature scheme '" +
                                    quadrature + "' (supported: cos)");
}

// ---------------------------------------------------------------------------
// Black-Scholes

double bs_price(const MarketEnv& env, double strike, double maturity, double vol,
                OptionKind kind) {
    check_common_inputs(env, strike, maturity);
    check_finite(vol, "bs_price: vol must be finite");
    if (vol <= 0.0) throw std::invalid_argument("bs_price: vol must be positive");

    const double stddev = vol * std::sqrt(maturity);
    const double d1 =
        (std::log(env.spot / strike) +
         (env.rate - env.dividend_yield + 0.5 * vol * vol) * maturity) /
        stddev;
    const double d2 = d1 - stddev;
    const double df_spot = env.spot * std::exp(-env.dividend_yield * maturity);
    const double df_strike = strike * std::exp(-env.rate * maturity);
    if (kind == OptionKind::call)
        return df_spot * norm_cdf(d1) - df_strike * norm_cdf(d2);
    return df_strike * norm_cdf(-d2) - df_spot * norm_cdf(-d1);
}

double bs_vega(const MarketEnv& env, double strike, double maturity, double vol) {
    check_common_inputs(env, strike, maturity);
    check_finite(vol, "bs_vega: vol must be finite");
    if (vol <= 0.0) throw std::invalid_argument("bs_vega: vol must be positive");

    const double stddev = vol * std::sqrt(maturity);
    const double d1 =
        (std::log(env.spot / strike) +
         (env.rate - env.dividend_yield + 0.5 * vol * vol) * maturity) /
        stddev;
    return env.spot * std::exp(-env.dividend_yield * maturity) * norm_pdf(d1) *
           std::sqrt(maturity);
}

// ---------------------------------------------------------------------------
// Implied volatility: Newton from the hint when given, safeguarded Brent on
// the hard bracket [1e-4, 5] otherwise.

namespace {

// Classic Brent-Dekker root finder; f(lo) and f(hi) must straddle zero.
template <typename F>
double brent_root(const F& f, double lo, double hi, double f_lo, double f_hi,
                  double xtol, int max_iter) {
    double a = lo, b = hi, fa = f_lo, fb = f_hi;
    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int iter = 0; iter < max_iter; ++iter) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() *
                               std::abs(b) + 0.5 * xtol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0) return b;
        if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
            d = m; e = m;  // bisection
        } else {
            double p, q;
            const double s = fb / fa;
            if (a == c) {  // secant
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {  // inverse quadratic interpolation
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q),
                                   std::abs(e * q))) {
                e = d; d = p / q;  // accept interpolation
            } else {
                d = m; e = m;  // fall back to bisection
            }
        }
        a = b; fa = fb;
        b += (std::abs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) { c = a; fc = fa; d = b - a; e = d; }
    }
    return b;
}

}  // namespace

double implied_vol(const MarketEnv& env, double strike, double maturity,
                   OptionKind kind, double price, std::optional<double> hint) {
    check_common_inputs(env, strike, maturity);
    check_finite(price, "implied_vol: price must be finite");

    const double df_spot = env.spot * std::exp(-env.dividend_yield * maturity);
    const double df_strike = strike * std::exp(-env.rate * maturity);
    const double lower_band = kind == OptionKind::call
                                  ? std::max(0.0, df_spot - df_strike)
                                  : std::max(0.0, df_strike - df_spot);
    const double upper_band = kind == OptionKind::call ? df_spot : df_strike;
    if (!(price > lower_band && price < upper_band))
        throw unattainable_price_error(
            "implied_vol: price outside the static no-arbitrage band");

    const auto diff = [&](double vol) {
        return bs_price(env, strike, maturity, vol, kind) - price;
    };

    // The price is arbitrage-consistent, so a root exists in (0, inf);
    // we only support it inside the bracket.
    const double f_lo = diff(kIvBracketLow);
    if (f_lo >= 0.0) {
        if (f_lo == 0.0) return kIvBracketLow;
        throw unattainable_price_error(
            "implied_vol: price implies a volatility below the 1e-4 bracket edge");
    }
    const double f_hi = diff(kIvBracketHigh);
    if (f_hi <= 0.0) {
        if (f_hi == 0.0) return kIvBracketHigh;
        throw unattainable_price_error(
            "implied_vol: price implies a volatility above the 5.0 bracket edge");
    }

    // Newton fast path (typically 2-4 iterations when warm-started by the
    // previous objective evaluation).
    if (hint) {
        double vol = std::clamp(*hint, kIvBracketLow, kIvBracketHigh);
        for (int iter = 0; iter < 8; ++iter) {
            const double err = diff(vol);
            const double vega = bs_vega(env, strike, maturity, vol);
            if (vega < 1e-12) break;
            const double step = err / vega;
            double next = vol - step;
            if (!(next > kIvBracketLow && next < kIvBracketHigh)) break;
            if (std::abs(step) < 1e-11 * std::max(1.0, vol)) return next;
            vol = next;
        }
    }

    const double root = brent_root(diff, kIvBracketLow, kIvBracketHigh, f_lo, f_hi,
                                   1e-12, 200);
    const double residual = diff(root);
    if (std::abs(residual) > 1e-8 * std::max(price, 1e-6))
        throw iv_convergence_error("implied_vol: root finder failed to converge");
    return root;
}

// ---------------------------------------------------------------------------
// Bates characteristic function of the log return, "little trap" form.

std::complex<double> bates_char_fn(const BatesParams& params, const MarketEnv& env,
                                   double maturity, std::complex<double> u) {
    params.validate();
    env.validate();
    if (!(std::isfinite(maturity) && maturity > 0.0))
        throw std::invalid_argument("bates_char_fn: maturity must be positive");

    const std::complex<double> i(0.0, 1.0);
    const double sv2 = params.sigma_v * params.sigma_v;

    const std::complex<double> xi =
        params.kappa - params.rho * params.sigma_v * i * u;
    std::complex<double> d = std::sqrt(xi * xi + sv2 * (i * u + u * u));
    if (std::abs(xi + d) < 1e-14 * std::abs(xi)) d = -d;  // keep g finite
    const std::complex<double> g = (xi - d) / (xi + d);
    const std::complex<double> e = std::exp(-d * maturity);
    const std::complex<double> big_d =
        (xi - d) / sv2 * (1.0 - e) / (1.0 - g * e);
    const std::complex<double> big_c =
        params.kappa * params.theta / sv2 *
        ((xi - d) * maturity - 2.0 * std::log((1.0 - g * e) / (1.0 - g)));
    const std::complex<double> heston = std::exp(big_c + big_d * params.v0);

    // Compound-Poisson jumps with the -lambda mu_j compensator in the drift.
    const double mu_ln = params.jump_log_mean();
    const std::complex<double> jump_cf =
        std::exp(params.lambda * maturity *
                     (std::exp(i * u * mu_ln - 0.5 * u * u * params.sigma_j *
                                                   params.sigma_j) -
                      1.0) -
                 i * u * params.lambda * params.mu_j * maturity);

    const std::complex<double> drift =
        std::exp(i * u * (env.rate - env.dividend_yield) * maturity);

    return drift * heston * jump_cf;
}

// ---------------------------------------------------------------------------
// Cosine-expansion pricer.

namespace {

// Cumulants of the log return used for the expansion range.
struct Cumulants {
    double c1;
    double width;  // sqrt(c2 + sqrt(c4))
};

Cumulants log_return_cumulants(const BatesParams& p, const MarketEnv& env,
                               double tau) {
    const double kt = p.kappa * tau;
    const double emkt = std::exp(-kt);
    const double integrated_var =
        p.theta * tau + (p.v0 - p.theta) * (1.0 - emkt) / p.kappa;
    const double mu_ln = p.jump_log_mean();

    const double c1 = (env.rate - env.dividend_yield - p.lambda * p.mu_j) * tau -
                      0.5 * integrated_var + p.lambda * tau * mu_ln;

    const double k = p.kappa, th = p.theta, sv = p.sigma_v, rh = p.rho, v0 = p.v0;
    const double c2_heston =
        1.0 / (8.0 * k * k * k) *
        (sv * tau * k * emkt * (v0 - th) * (8.0 * k * rh - 4.0 * sv) +
         k * rh * sv * (1.0 - emkt) * (16.0 * th - 8.0 * v0) +
         2.0 * th * k * tau * (-4.0 * k * rh * sv + sv * sv + 4.0 * k * k) +
         sv * sv * ((th - 2.0 * v0) * emkt * emkt + th * (6.0 * emkt - 7.0) +
                    2.0 * v0) +
         8.0 * k * k * (v0 - th) * (1.0 - emkt));

    const double sj2 = p.sigma_j * p.sigma_j;
    const double c2_jump = p.lambda * tau * (mu_ln * mu_ln + sj2);
    const double c4_jump =
        p.lambda * tau *
        (mu_ln * mu_ln * mu_ln * mu_ln + 6.0 * mu_ln * mu_ln * sj2 + 3.0 * sj2 * sj2);

    const double c2 = std::max(c2_heston + c2_jump, 1e-8 * integrated_var + 1e-14);
    return {c1, std::sqrt(c2 + std::sqrt(std::max(c4_jump, 0.0)))};
}

}  // namespace

std::vector<double> price_european_strip(const BatesParams& params,
                                         const MarketEnv& env, double maturity,
                                         const std::vector<double>& strikes,
                                         const std::vector<OptionKind>& kinds,
                                         const PricerSettings& settings) {
    params.validate();
    env.validate();
    settings.validate();
    if (!(std::isfinite(maturity) && maturity > 0.0))
        throw std::invalid_argument("price_european_strip: maturity must be positive");
    if (strikes.size() != kinds.size())
        throw std::invalid_argument(
            "price_european_strip: strikes and kinds must align");
    if (strikes.empty()) return {};

    double x_min = std::numeric_limits<double>::infinity();
    double x_max = -std::numeric_limits<double>::infinity();
    std::vector<double> x(strikes.size());
    for (std::size_t s = 0; s < strikes.size(); ++s) {
        if (!(std::isfinite(strikes[s]) && strikes[s] > 0.0))
            throw std::invalid_argument(
                "price_european_strip: strikes must be positive");
        x[s] = std::log(env.spot / strikes[s]);
        x_min = std::min(x_min, x[s]);
        x_max = std::max(x_max, x[s]);
    }

    const auto cum = log_return_cumulants(params, env, maturity);
    const double a = x_min + cum.c1 - settings.truncation_width * cum.width;
    const double b = x_max + cum.c1 + settings.truncation_width * cum.width;
    const double span = b - a;

    const int n = settings.fourier_grid_size;
    const double pi = 3.14159265358979323846;

    // A_k = phi(u_k) e^{-i u_k a}, shared by every strike of the maturity.
    std::vector<double> re_a(n), im_a(n);
    for (int k = 0; k < n; ++k) {
        const double u = k * pi / span;
        const std::complex<double> phi =
            bates_char_fn(params, env, maturity, std::complex<double>(u, 0.0));
        const std::complex<double> ak =
            phi * std::exp(std::complex<double>(0.0, -u * a));
        re_a[k] = ak.real();
        im_a[k] = ak.imag();
    }

    // Payoff cosine coefficients over [0, b] (call) and [a, 0] (put); the
    // strike enters only as a prefactor, so both vectors are shared too.
    std::vector<double> w_call(n), w_put(n);
    for (int k = 0; k < n; ++k) {
        const double u = k * pi / span;
        auto chi = [&](double c, double d) {
            const double uc = u * (c - a), ud = u * (d - a);
            return (std::cos(ud) * std::exp(d) - std::cos(uc) * std::exp(c) +
                    u * (std::sin(ud) * std::exp(d) - std::sin(uc) * std::exp(c))) /
                   (1.0 + u * u);
        };
        auto psi = [&](double c, double d) {
            if (k == 0) return d - c;
            return (std::sin(u * (d - a)) - std::sin(u * (c - a))) / u;
        };
        w_call[k] = chi(0.0, b) - psi(0.0, b);
        w_put[k] = psi(a, 0.0) - chi(a, 0.0);
    }

    const double discount = std::exp(-env.rate * maturity);
    const double scale = 2.0 / span;

    std::vector<double> prices(strikes.size());
    for (std::size_t s = 0; s < strikes.size(); ++s) {
        // E_k = e^{i u_k x} by complex recurrence; k = 0 term weighted 1/2.
        const double step = pi * x[s] / span;
        const double rot_re = std::cos(step), rot_im = std::sin(step);
        double e_re = 1.0, e_im = 0.0;
        const std::vector<double>& w =
            kinds[s] == OptionKind::call ? w_call : w_put;
        double acc = 0.5 * re_a[0] * w[0];
        for (int k = 1; k < n; ++k) {
            const double next_re = e_re * rot_re - e_im * rot_im;
            const double next_im = e_re * rot_im + e_im * rot_re;
            e_re = next_re;
            e_im = next_im;
            acc += (re_a[k] * e_re - im_a[k] * e_im) * w[k];
        }
        double price = discount * strikes[s] * scale * acc;
        // Far-wing expansion noise can land an epsilon below zero.
        if (price < 0.0 && price > -1e-10 * env.spot) price = 0.0;
        prices[s] = price;
    }
    return prices;
}

double price_european(const BatesParams& params, const MarketEnv& env, double strike,
                      double maturity, OptionKind kind,
                      const PricerSettings& settings) {
    return price_european_strip(params, env, maturity, {strike}, {kind},
                                settings)[0];
}

// ---------------------------------------------------------------------------
// SJD: analytic Poisson mixture of Black-Scholes prices.

double sjd_price(const SjdParams& params, const MarketEnv& env, double strike,
                 double maturity, OptionKind kind) {
    params.validate();
    check_common_inputs(env, strike, maturity);

    // Degenerate limits must reproduce Black-Scholes exactly, untouched by
    // the mixture's tail truncation.
    if (params.lambda == 0.0 || params.jump == 0.0)
        return bs_price(env, strike, maturity, params.sigma, kind);

    const double intensity = params.lambda * maturity;
    const double compensator =
        params.lambda * std::expm1(params.jump) * maturity;  // lambda (e^J - 1) tau

    double weight = std::exp(-intensity);  // Poisson P[N = 0]
    double cumulative = weight;
    double acc = 0.0;
    const int hard_cap = 1 + static_cast<int>(intensity + 60.0 * std::sqrt(intensity) + 60.0);
    for (int jumps = 0; jumps < hard_cap; ++jumps) {
        if (jumps > 0) {
            weight *= intensity / jumps;
            cumulative += weight;
        }
        MarketEnv conditional = env;
        conditional.spot =
            env.spot * std::exp(jumps * params.jump - compensator);
        acc += weight * bs_price(conditional, strike, maturity, params.sigma, kind);
        if (1.0 - cumulative < 1e-12) break;  // Poisson tail exhausted
    }
    return acc;
}

}  // namespace jointcal
