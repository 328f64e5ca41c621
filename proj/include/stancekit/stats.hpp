#pragma once

// Regression-side statistics: Pearson correlation, correlation-based
// feature selection, VIF pruning, OLS with F-test p-values, correlation
// matrices, confusion metrics, and Cohen's kappa arithmetic.

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "stancekit/matrix.hpp"

namespace stancekit {

using Rows = std::vector<std::vector<double>>;  // n rows x p columns

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("pearson: need length >= 2");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) throw std::invalid_argument("pearson: constant input");
    return sxy / std::sqrt(sxx * syy);
}

namespace detail {

// Regularized incomplete beta via Lentz's continued fraction.
inline double betacf(double a, double b, double x) {
    const double eps = 1e-15, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

inline double incbeta(double a, double b, double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    double front = std::exp(lbeta + a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// Householder QR least squares on A (n x m, n >= m). Throws on rank
// deficiency, naming the offending column via `names` when supplied.
inline std::vector<double> qr_solve(Rows A, std::vector<double> b,
                                    const std::vector<std::string>* names = nullptr) {
    const std::size_t n = A.size();
    const std::size_t m = n == 0 ? 0 : A[0].size();
    if (n < m) throw std::invalid_argument("qr_solve: fewer rows than columns");
    double max_norm = 0;
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += A[i][j] * A[i][j];
        max_norm = std::max(max_norm, std::sqrt(s));
    }
    const double tol = 1e-10 * std::max(1.0, max_norm);
    for (std::size_t k = 0; k < m; ++k) {
        double norm = 0;
        for (std::size_t i = k; i < n; ++i) norm += A[i][k] * A[i][k];
        norm = std::sqrt(norm);
        if (norm < tol) {
            std::string col = names && k < names->size() ? (*names)[k] : ("column " + std::to_string(k));
            throw std::invalid_argument("rank deficient design matrix at " + col);
        }
        double alpha = A[k][k] > 0 ? -norm : norm;
        std::vector<double> v(n - k, 0.0);
        v[0] = A[k][k] - alpha;
        for (std::size_t i = k + 1; i < n; ++i) v[i - k] = A[i][k];
        double vnorm2 = 0;
        for (double t : v) vnorm2 += t * t;
        if (vnorm2 > 0) {
            for (std::size_t j = k; j < m; ++j) {
                double dot = 0;
                for (std::size_t i = k; i < n; ++i) dot += v[i - k] * A[i][j];
                double f = 2.0 * dot / vnorm2;
                for (std::size_t i = k; i < n; ++i) A[i][j] -= f * v[i - k];
            }
            double dot = 0;
            for (std::size_t i = k; i < n; ++i) dot += v[i - k] * b[i];
            double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < n; ++i) b[i] -= f * v[i - k];
        }
    }
    std::vector<double> x(m, 0.0);
    for (std::size_t kk = m; kk-- > 0;) {
        double s = b[kk];
        for (std::size_t j = kk + 1; j < m; ++j) s -= A[kk][j] * x[j];
        if (std::abs(A[kk][kk]) < tol) {
            std::string col = names && kk < names->size() ? (*names)[kk] : ("column " + std::to_string(kk));
            throw std::invalid_argument("rank deficient design matrix at " + col);
        }
        x[kk] = s / A[kk][kk];
    }
    return x;
}

}  // namespace detail

struct OLSFit {
    std::vector<double> coefficients;
    double intercept = 0;
    double r_squared = 0;
    double f_statistic = 0;
    double f_pvalue = 1;
    std::size_t n = 0, p = 0;

    double predict(const std::vector<double>& x) const {
        double v = intercept;
        for (std::size_t j = 0; j < coefficients.size(); ++j) v += coefficients[j] * x[j];
        return v;
    }
};

// Least squares via Householder QR; R^2, F = (R^2/p)/((1-R^2)/(n-p-1)),
// p-value from the F distribution via the incomplete beta identity.
inline OLSFit ols(const Rows& X, const std::vector<double>& y,
                  const std::vector<std::string>* names = nullptr) {
    const std::size_t n = X.size();
    const std::size_t p = n == 0 ? 0 : X[0].size();
    if (n != y.size()) throw std::invalid_argument("ols: X/y size mismatch");
    if (n <= p + 1) throw std::invalid_argument("ols: need n > p + 1");

    Rows A(n, std::vector<double>(p + 1, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) A[i][j + 1] = X[i][j];
    }
    std::vector<std::string> aug_names;
    if (names) {
        aug_names.push_back("intercept");
        aug_names.insert(aug_names.end(), names->begin(), names->end());
    }
    std::vector<double> beta = detail::qr_solve(A, y, names ? &aug_names : nullptr);

    OLSFit fit;
    fit.n = n;
    fit.p = p;
    fit.intercept = beta[0];
    fit.coefficients.assign(beta.begin() + 1, beta.end());

    double ybar = 0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(n);
    double ss_tot = 0, ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = fit.intercept;
        for (std::size_t j = 0; j < p; ++j) pred += fit.coefficients[j] * X[i][j];
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    fit.r_squared = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
    if (p > 0) {
        const double d1 = static_cast<double>(p);
        const double d2 = static_cast<double>(n - p - 1);
        if (fit.r_squared >= 1.0) {
            fit.f_statistic = std::numeric_limits<double>::infinity();
            fit.f_pvalue = 0.0;
        } else {
            fit.f_statistic = (fit.r_squared / d1) / ((1.0 - fit.r_squared) / d2);
            fit.f_pvalue = detail::incbeta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * fit.f_statistic));
        }
    }
    return fit;
}

// Keep columns whose correlation with the target has magnitude at least
// min_abs; constant columns are dropped.
inline std::vector<std::string> select_by_correlation(const FeatureMatrix& m,
                                                      const std::vector<double>& target,
                                                      double min_abs = 0.3) {
    if (target.size() != m.n_rows()) throw std::invalid_argument("target length mismatch");
    for (double v : target) {
        if (is_missing(v)) throw std::invalid_argument("target must be complete");
    }
    std::vector<std::string> keep;
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        std::vector<double> xs, ys;
        for (std::size_t r = 0; r < m.n_rows(); ++r) {
            double v = m.cell(r, c);
            if (!is_missing(v)) {
                xs.push_back(v);
                ys.push_back(target[r]);
            }
        }
        if (xs.size() < 2) continue;
        double r;
        try {
            r = pearson(xs, ys);
        } catch (const std::invalid_argument&) {
            continue;  // constant column
        }
        if (std::abs(r) >= min_abs) keep.push_back(m.column_names()[c]);
    }
    return keep;
}

// VIF_j = 1 / (1 - R^2_j) from regressing column j on the others.
// Iteratively removes the largest-VIF column (ties -> alphabetical)
// while any VIF >= max_vif; perfect collinearity counts as infinite.
inline std::vector<std::string> vif_prune(const FeatureMatrix& m, double max_vif = 6.0,
                                          std::vector<std::pair<std::string, double>>* removed = nullptr) {
    if (m.n_cols() < 2) throw std::invalid_argument("vif_prune needs >= 2 columns");
    std::vector<std::string> cols(m.column_names());
    std::sort(cols.begin(), cols.end());

    auto vif_of = [&](const std::string& target_col, std::vector<std::string> others) {
        std::vector<double> y = m.column(target_col);
        while (true) {
            Rows X(m.n_rows(), std::vector<double>(others.size()));
            for (std::size_t j = 0; j < others.size(); ++j) {
                const auto& col = m.column(others[j]);
                for (std::size_t r = 0; r < m.n_rows(); ++r) X[r][j] = col[r];
            }
            try {
                OLSFit fit = ols(X, y, &others);
                double r2 = std::min(fit.r_squared, 1.0);
                if (r2 >= 1.0 - 1e-12) return std::numeric_limits<double>::infinity();
                return 1.0 / (1.0 - r2);
            } catch (const std::invalid_argument& e) {
                // collinearity among the regressors does not make the target
                // column infinite: drop the redundant regressor and retry
                std::string msg = e.what();
                std::string victim;
                for (const auto& o : others) {
                    if (msg.find(o) != std::string::npos && o.size() > victim.size()) victim = o;
                }
                if (victim.empty() || others.size() <= 1) {
                    return std::numeric_limits<double>::infinity();
                }
                others.erase(std::find(others.begin(), others.end(), victim));
            }
        }
    };

    while (cols.size() >= 2) {
        std::string worst;
        double worst_vif = -1;
        for (const auto& c : cols) {
            std::vector<std::string> others;
            for (const auto& o : cols) {
                if (o != c) others.push_back(o);
            }
            double v = vif_of(c, others);
            if (v > worst_vif) {  // alphabetical scan keeps the first of a tie
                worst_vif = v;
                worst = c;
            }
        }
        if (worst_vif < max_vif) break;
        cols.erase(std::find(cols.begin(), cols.end(), worst));
        if (removed) removed->push_back({worst, worst_vif});
    }
    // restore the matrix's original column order
    std::vector<std::string> out;
    std::set<std::string> keep(cols.begin(), cols.end());
    for (const auto& name : m.column_names()) {
        if (keep.count(name)) out.push_back(name);
    }
    return out;
}

// Pairwise Pearson; requires a complete numeric matrix.
inline Rows correlation_matrix(const FeatureMatrix& m) {
    const std::size_t p = m.n_cols();
    for (std::size_t c = 0; c < p; ++c) {
        for (double v : m.column(c)) {
            if (is_missing(v)) throw std::invalid_argument("correlation_matrix requires a complete matrix");
        }
    }
    Rows r(p, std::vector<double>(p, 1.0));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            double v = pearson(m.column(i), m.column(j));
            r[i][j] = r[j][i] = v;
        }
    }
    return r;
}

struct Metrics {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0;
    bool degenerate = false;  // some ratio had a zero denominator
};

inline Metrics metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn) {
    if (tp < 0 || fp < 0 || fn < 0 || tn < 0) throw std::invalid_argument("negative confusion count");
    const std::int64_t total = tp + fp + fn + tn;
    if (total == 0) throw std::invalid_argument("empty confusion matrix");
    Metrics m;
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    else m.degenerate = true;
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    else m.degenerate = true;
    if (m.precision + m.recall > 0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else m.degenerate = true;
    return m;
}

inline double cohens_kappa(double accuracy, double baseline) {
    if (baseline >= 1.0) throw std::invalid_argument("kappa baseline must be < 1");
    return (accuracy - baseline) / (1.0 - baseline);
}

}  // namespace stancekit
