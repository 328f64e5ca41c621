#pragma once

// Classifiers for the attendance model: class-weighted logistic
// regression (Newton), linear SVM (deterministic full-batch subgradient),
// and a random forest, plus k-fold cross-validation and the feature-set
// ablation runner. Every trainer is deterministic given its seed.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "stancekit/matrix.hpp"
#include "stancekit/stats.hpp"

namespace stancekit {

enum class ClassifierKind { logreg, linear_svm, random_forest };

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::logreg;
    double C = 1.0;             // logreg / svm regularization
    int trees = 10;             // random forest
    int min_split = 2;
    bool balanced = true;       // class_weight = balanced
    std::uint64_t seed = 0;
};

// w_j = n / (k * n_j)
inline std::map<int, double> class_weights(const std::vector<int>& labels) {
    std::map<int, std::int64_t> counts;
    for (int y : labels) ++counts[y];
    if (counts.empty()) throw std::invalid_argument("class_weights: empty labels");
    for (const auto& [c, n] : counts) {
        if (n == 0) throw std::invalid_argument("class_weights: empty class");
    }
    const double n = static_cast<double>(labels.size());
    const double k = static_cast<double>(counts.size());
    std::map<int, double> w;
    for (const auto& [c, nc] : counts) w[c] = n / (k * static_cast<double>(nc));
    return w;
}

namespace detail {

inline std::vector<double> sample_weights(const std::vector<int>& y, bool balanced) {
    std::vector<double> w(y.size(), 1.0);
    if (balanced) {
        auto cw = class_weights(y);
        for (std::size_t i = 0; i < y.size(); ++i) w[i] = cw.at(y[i]);
    }
    return w;
}

}  // namespace detail

// Class-weighted logistic loss with L2 penalty 1/(2C) on the
// coefficients (intercept unpenalized). beta[0] is the intercept.
// Labels are {0,1}. Exposed so the gradient can be finite-difference
// checked independently of the trainer.
inline double logistic_loss(const Rows& X, const std::vector<int>& y,
                            const std::vector<double>& sample_w, const std::vector<double>& beta,
                            double C) {
    double loss = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        double eta = beta[0];
        for (std::size_t j = 0; j < X[i].size(); ++j) eta += beta[j + 1] * X[i][j];
        double s = y[i] == 1 ? eta : -eta;
        // log(1 + exp(-s)), overflow-safe
        loss += sample_w[i] * (s > 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s)));
    }
    for (std::size_t j = 1; j < beta.size(); ++j) loss += beta[j] * beta[j] / (2.0 * C);
    return loss;
}

inline std::vector<double> logistic_grad(const Rows& X, const std::vector<int>& y,
                                         const std::vector<double>& sample_w,
                                         const std::vector<double>& beta, double C) {
    std::vector<double> g(beta.size(), 0.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
        double eta = beta[0];
        for (std::size_t j = 0; j < X[i].size(); ++j) eta += beta[j + 1] * X[i][j];
        double p = 1.0 / (1.0 + std::exp(-eta));
        double d = sample_w[i] * (p - (y[i] == 1 ? 1.0 : 0.0));
        g[0] += d;
        for (std::size_t j = 0; j < X[i].size(); ++j) g[j + 1] += d * X[i][j];
    }
    for (std::size_t j = 1; j < beta.size(); ++j) g[j] += beta[j] / C;
    return g;
}

struct LinearModel {
    std::vector<double> coefficients;
    double intercept = 0;

    double score(const std::vector<double>& x) const {
        double s = intercept;
        for (std::size_t j = 0; j < coefficients.size(); ++j) s += coefficients[j] * x[j];
        return s;
    }
    int predict(const std::vector<double>& x) const { return score(x) >= 0 ? 1 : 0; }
};

// Newton iterations with step halving; converges when the gradient
// max-norm drops below 1e-6 (or after 1000 iterations).
inline LinearModel train_logreg(const Rows& X, const std::vector<int>& y, const ClassifierSpec& spec) {
    const std::size_t n = X.size();
    const std::size_t p = n == 0 ? 0 : X[0].size();
    if (n == 0) throw std::invalid_argument("train_logreg: empty data");
    std::vector<double> w = detail::sample_weights(y, spec.balanced);
    std::vector<double> beta(p + 1, 0.0);

    for (int iter = 0; iter < 1000; ++iter) {
        std::vector<double> g = logistic_grad(X, y, w, beta, spec.C);
        double gmax = 0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax < 1e-6) break;

        // Hessian: X' diag(w p (1-p)) X + (1/C) I (intercept unpenalized)
        const std::size_t m = p + 1;
        Rows H(m, std::vector<double>(m, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            double eta = beta[0];
            for (std::size_t j = 0; j < p; ++j) eta += beta[j + 1] * X[i][j];
            double prob = 1.0 / (1.0 + std::exp(-eta));
            double d = w[i] * prob * (1.0 - prob);
            std::vector<double> xi(m);
            xi[0] = 1.0;
            for (std::size_t j = 0; j < p; ++j) xi[j + 1] = X[i][j];
            for (std::size_t a = 0; a < m; ++a) {
                for (std::size_t b = a; b < m; ++b) H[a][b] += d * xi[a] * xi[b];
            }
        }
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = 0; b < a; ++b) H[a][b] = H[b][a];
        }
        for (std::size_t j = 1; j < m; ++j) H[j][j] += 1.0 / spec.C;
        for (std::size_t j = 0; j < m; ++j) H[j][j] += 1e-10;  // keeps the solve well posed

        std::vector<double> step;
        try {
            step = detail::qr_solve(H, g);
        } catch (const std::invalid_argument&) {
            break;
        }
        double f0 = logistic_loss(X, y, w, beta, spec.C);
        double t = 1.0;
        std::vector<double> trial(m);
        for (int halving = 0; halving < 30; ++halving) {
            for (std::size_t j = 0; j < m; ++j) trial[j] = beta[j] - t * step[j];
            if (logistic_loss(X, y, w, trial, spec.C) < f0) break;
            t *= 0.5;
        }
        beta = trial;
    }
    LinearModel model;
    model.intercept = beta[0];
    model.coefficients.assign(beta.begin() + 1, beta.end());
    return model;
}

// Deterministic full-batch projected subgradient on the class-weighted
// hinge loss with L2 regularization (Pegasos-style 1/(lambda t) steps).
inline LinearModel train_linear_svm(const Rows& X, const std::vector<int>& y, const ClassifierSpec& spec) {
    const std::size_t n = X.size();
    const std::size_t p = n == 0 ? 0 : X[0].size();
    if (n == 0) throw std::invalid_argument("train_linear_svm: empty data");
    {
        std::map<int, std::int64_t> counts;
        for (int v : y) ++counts[v];
        if (counts.size() < 2) throw std::invalid_argument("train_linear_svm: needs two classes");
    }
    std::vector<double> sw = detail::sample_weights(y, spec.balanced);
    double sw_total = std::accumulate(sw.begin(), sw.end(), 0.0);
    const double lambda = 1.0 / (spec.C * sw_total);

    std::vector<double> w(p, 0.0);
    double b = 0;
    const int T = 2000;
    for (int t = 1; t <= T; ++t) {
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        std::vector<double> grad(p, 0.0);
        double grad_b = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double yi = y[i] == 1 ? 1.0 : -1.0;
            double margin = b;
            for (std::size_t j = 0; j < p; ++j) margin += w[j] * X[i][j];
            if (yi * margin < 1.0) {
                double f = sw[i] * yi / sw_total;
                for (std::size_t j = 0; j < p; ++j) grad[j] -= f * X[i][j];
                grad_b -= f;
            }
        }
        for (std::size_t j = 0; j < p; ++j) w[j] -= eta * (lambda * w[j] + grad[j]);
        b -= eta * grad_b;
    }
    LinearModel model;
    model.coefficients = std::move(w);
    model.intercept = b;
    return model;
}

namespace detail {

struct TreeNode {
    int feature = -1;
    double threshold = 0;
    int left = -1, right = -1;
    int leaf_label = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;

    int predict(const std::vector<double>& x) const {
        int cur = 0;
        while (nodes[static_cast<std::size_t>(cur)].feature >= 0) {
            const TreeNode& nd = nodes[static_cast<std::size_t>(cur)];
            cur = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(cur)].leaf_label;
    }
};

inline double gini_impurity(double w0, double w1) {
    double tot = w0 + w1;
    if (tot == 0) return 0;
    double p0 = w0 / tot, p1 = w1 / tot;
    return 1.0 - p0 * p0 - p1 * p1;
}

inline int build_tree_node(Tree& tree, const Rows& X, const std::vector<int>& y,
                           const std::vector<double>& sw, std::vector<std::size_t>& idx,
                           int min_split, int n_features_per_split, std::mt19937& rng) {
    double w0 = 0, w1 = 0;
    for (std::size_t i : idx) (y[i] == 1 ? w1 : w0) += sw[i];
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});

    auto make_leaf = [&](int id) {
        tree.nodes[static_cast<std::size_t>(id)].leaf_label = w1 > w0 ? 1 : 0;
    };
    if (idx.size() < static_cast<std::size_t>(min_split) || w0 == 0 || w1 == 0) {
        make_leaf(node_id);
        return node_id;
    }

    const std::size_t p = X[0].size();
    std::vector<int> feats(p);
    std::iota(feats.begin(), feats.end(), 0);
    std::shuffle(feats.begin(), feats.end(), rng);
    feats.resize(static_cast<std::size_t>(std::min<int>(n_features_per_split, static_cast<int>(p))));
    std::sort(feats.begin(), feats.end());

    double best_score = gini_impurity(w0, w1);
    int best_feat = -1;
    double best_thr = 0;
    const double parent_tot = w0 + w1;
    for (int f : feats) {
        std::vector<std::size_t> order(idx);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (X[a][static_cast<std::size_t>(f)] != X[b][static_cast<std::size_t>(f)])
                return X[a][static_cast<std::size_t>(f)] < X[b][static_cast<std::size_t>(f)];
            return a < b;
        });
        double l0 = 0, l1 = 0, r0 = w0, r1 = w1;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            std::size_t i = order[k];
            (y[i] == 1 ? l1 : l0) += sw[i];
            (y[i] == 1 ? r1 : r0) -= sw[i];
            double xv = X[i][static_cast<std::size_t>(f)];
            double xn = X[order[k + 1]][static_cast<std::size_t>(f)];
            if (xv == xn) continue;
            double score = ((l0 + l1) * gini_impurity(l0, l1) + (r0 + r1) * gini_impurity(r0, r1)) / parent_tot;
            if (score < best_score - 1e-12) {
                best_score = score;
                best_feat = f;
                best_thr = (xv + xn) / 2.0;
            }
        }
    }
    if (best_feat < 0) {
        make_leaf(node_id);
        return node_id;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
        (X[i][static_cast<std::size_t>(best_feat)] <= best_thr ? left : right).push_back(i);
    }
    tree.nodes[static_cast<std::size_t>(node_id)].feature = best_feat;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_thr;
    int l = build_tree_node(tree, X, y, sw, left, min_split, n_features_per_split, rng);
    tree.nodes[static_cast<std::size_t>(node_id)].left = l;
    int r = build_tree_node(tree, X, y, sw, right, min_split, n_features_per_split, rng);
    tree.nodes[static_cast<std::size_t>(node_id)].right = r;
    return node_id;
}

}  // namespace detail

struct ForestModel {
    std::vector<detail::Tree> trees;

    int predict(const std::vector<double>& x) const {
        int votes = 0;
        for (const auto& t : trees) votes += t.predict(x);
        return 2 * votes >= static_cast<int>(trees.size()) ? 1 : 0;
    }
};

// Bootstrap rows, sqrt(p) features per split, class-weighted gini, grown
// to purity or below min_split; majority vote over trees.
inline ForestModel train_random_forest(const Rows& X, const std::vector<int>& y, const ClassifierSpec& spec) {
    const std::size_t n = X.size();
    if (n == 0) throw std::invalid_argument("train_random_forest: empty data");
    const std::size_t p = X[0].size();
    std::vector<double> sw = detail::sample_weights(y, spec.balanced);
    const int n_feats = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));

    std::mt19937 rng(static_cast<std::uint32_t>(spec.seed));
    ForestModel forest;
    for (int t = 0; t < spec.trees; ++t) {
        std::vector<std::size_t> idx(n);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t i = 0; i < n; ++i) idx[i] = pick(rng);
        detail::Tree tree;
        detail::build_tree_node(tree, X, y, sw, idx, spec.min_split, n_feats, rng);
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

struct TrainedClassifier {
    ClassifierKind kind;
    LinearModel linear;
    ForestModel forest;

    int predict(const std::vector<double>& x) const {
        return kind == ClassifierKind::random_forest ? forest.predict(x) : linear.predict(x);
    }
};

inline TrainedClassifier train_classifier(const Rows& X, const std::vector<int>& y,
                                          const ClassifierSpec& spec) {
    TrainedClassifier m;
    m.kind = spec.kind;
    switch (spec.kind) {
        case ClassifierKind::logreg: m.linear = train_logreg(X, y, spec); break;
        case ClassifierKind::linear_svm: m.linear = train_linear_svm(X, y, spec); break;
        case ClassifierKind::random_forest: m.forest = train_random_forest(X, y, spec); break;
    }
    return m;
}

struct CVResult {
    std::vector<Metrics> folds;
    Metrics mean;
    Metrics stddev;  // population sd over folds
};

inline CVResult summarize_folds(std::vector<Metrics> folds) {
    CVResult r;
    r.folds = std::move(folds);
    const double k = static_cast<double>(r.folds.size());
    auto mean_of = [&](auto get) {
        double s = 0;
        for (const auto& m : r.folds) s += get(m);
        return s / k;
    };
    auto sd_of = [&](auto get, double mu) {
        double s = 0;
        for (const auto& m : r.folds) s += (get(m) - mu) * (get(m) - mu);
        return std::sqrt(s / k);
    };
    auto acc = [](const Metrics& m) { return m.accuracy; };
    auto pre = [](const Metrics& m) { return m.precision; };
    auto rec = [](const Metrics& m) { return m.recall; };
    auto f1 = [](const Metrics& m) { return m.f1; };
    r.mean.accuracy = mean_of(acc);
    r.mean.precision = mean_of(pre);
    r.mean.recall = mean_of(rec);
    r.mean.f1 = mean_of(f1);
    r.stddev.accuracy = sd_of(acc, r.mean.accuracy);
    r.stddev.precision = sd_of(pre, r.mean.precision);
    r.stddev.recall = sd_of(rec, r.mean.recall);
    r.stddev.f1 = sd_of(f1, r.mean.f1);
    return r;
}

// Seeded shuffle into k near-equal folds; positive class = 1.
inline CVResult kfold_cv(const ClassifierSpec& spec, const Rows& X, const std::vector<int>& y,
                         int k, std::uint64_t seed) {
    const std::size_t n = X.size();
    if (n < static_cast<std::size_t>(k)) throw std::invalid_argument("kfold_cv: n < k");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    std::shuffle(idx.begin(), idx.end(), rng);

    std::vector<Metrics> folds;
    for (int f = 0; f < k; ++f) {
        std::size_t lo = n * static_cast<std::size_t>(f) / static_cast<std::size_t>(k);
        std::size_t hi = n * static_cast<std::size_t>(f + 1) / static_cast<std::size_t>(k);
        Rows Xtr, Xte;
        std::vector<int> ytr, yte;
        for (std::size_t i = 0; i < n; ++i) {
            if (i >= lo && i < hi) {
                Xte.push_back(X[idx[i]]);
                yte.push_back(y[idx[i]]);
            } else {
                Xtr.push_back(X[idx[i]]);
                ytr.push_back(y[idx[i]]);
            }
        }
        ClassifierSpec fold_spec = spec;
        fold_spec.seed = spec.seed + static_cast<std::uint64_t>(f);
        TrainedClassifier model = train_classifier(Xtr, ytr, fold_spec);
        std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < Xte.size(); ++i) {
            int pred = model.predict(Xte[i]);
            if (pred == 1 && yte[i] == 1) ++tp;
            else if (pred == 1 && yte[i] == 0) ++fp;
            else if (pred == 0 && yte[i] == 1) ++fn;
            else ++tn;
        }
        folds.push_back(metrics(tp, fp, fn, tn));
    }
    return summarize_folds(std::move(folds));
}

struct AblationRow {
    std::string name;
    std::vector<std::string> columns;
    CVResult cv;
};

struct AblationReport {
    std::vector<AblationRow> rows;
};

// Rows for each single group, each group excluded, and a caller-supplied
// cumulative sequence of group names.
inline AblationReport ablation(const std::map<std::string, std::vector<std::string>>& groups,
                               const ClassifierSpec& spec, const FeatureMatrix& m,
                               const std::vector<int>& y, int k, std::uint64_t seed,
                               const std::vector<std::vector<std::string>>& cumulative = {}) {
    auto run = [&](const std::string& name, const std::vector<std::string>& cols) {
        AblationRow row;
        row.name = name;
        row.columns = cols;
        Rows X(m.n_rows(), std::vector<double>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto& col = m.column(cols[j]);
            for (std::size_t r = 0; r < m.n_rows(); ++r) X[r][j] = col[r];
        }
        row.cv = kfold_cv(spec, X, y, k, seed);
        return row;
    };
    std::vector<std::string> all_cols;
    for (const auto& [g, cols] : groups) all_cols.insert(all_cols.end(), cols.begin(), cols.end());

    AblationReport report;
    report.rows.push_back(run("full", all_cols));
    for (const auto& [g, cols] : groups) {
        report.rows.push_back(run(g + "_only", cols));
        std::vector<std::string> rest;
        for (const auto& [g2, cols2] : groups) {
            if (g2 != g) rest.insert(rest.end(), cols2.begin(), cols2.end());
        }
        if (!rest.empty()) report.rows.push_back(run(g + "_excluded", rest));
    }
    for (const auto& seq : cumulative) {
        std::vector<std::string> cols;
        std::string name;
        for (const auto& g : seq) {
            auto it = groups.find(g);
            if (it == groups.end()) throw std::invalid_argument("ablation: unknown group " + g);
            cols.insert(cols.end(), it->second.begin(), it->second.end());
            name += g;
        }
        report.rows.push_back(run("cum_" + name, cols));
    }
    return report;
}

struct OLSAblationRow {
    std::string name;
    double r_squared = 0;
    double f_pvalue = 1;
};

// Table-3-shaped ablation: full model, each group alone, each excluded.
inline std::vector<OLSAblationRow> ablation_ols(const std::map<std::string, std::vector<std::string>>& groups,
                                                const FeatureMatrix& m, const std::vector<double>& y) {
    auto run = [&](const std::string& name, const std::vector<std::string>& cols) {
        Rows X(m.n_rows(), std::vector<double>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto& col = m.column(cols[j]);
            for (std::size_t r = 0; r < m.n_rows(); ++r) X[r][j] = col[r];
        }
        OLSAblationRow row;
        row.name = name;
        OLSFit fit = ols(X, y, &cols);
        row.r_squared = fit.r_squared;
        row.f_pvalue = fit.f_pvalue;
        return row;
    };
    std::vector<std::string> all_cols;
    for (const auto& [g, cols] : groups) all_cols.insert(all_cols.end(), cols.begin(), cols.end());
    std::vector<OLSAblationRow> rows;
    rows.push_back(run("full", all_cols));
    for (const auto& [g, cols] : groups) {
        rows.push_back(run(g + "_only", cols));
        std::vector<std::string> rest;
        for (const auto& [g2, cols2] : groups) {
            if (g2 != g) rest.insert(rest.end(), cols2.begin(), cols2.end());
        }
        if (!rest.empty()) rows.push_back(run(g + "_excluded", rest));
    }
    return rows;
}

}  // namespace stancekit
