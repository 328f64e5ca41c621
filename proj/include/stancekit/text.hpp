#pragma once

// Text analytics: tokenization, multinomial Naive Bayes stance
// classification with confidence thresholding, log-odds term comparison
// with informative Dirichlet priors, lexicon scoring, category
// dictionaries, and entropy statistics.

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "stancekit/common.hpp"
#include "stancekit/partition.hpp"  // Side

namespace stancekit {

struct TokenDoc {
    std::string user_id;
    std::map<std::string, std::int64_t> tokens;  // token -> count
    std::int64_t total = 0;

    void add(const std::string& tok, std::int64_t n = 1) {
        tokens[tok] += n;
        total += n;
    }
};

inline std::set<std::string> load_stopwords(std::istream& in) {
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = to_lower(trim(line));
        if (!t.empty()) out.insert(t);
    }
    return out;
}

// Lowercase, split on non-alphanumeric except internal apostrophes;
// '#'/'@' prefixes stripped but the token kept; stopwords removed.
// Bytes outside ASCII are kept verbatim so UTF-8 sequences survive.
inline std::vector<std::string> tokenize(std::string_view text, const std::set<std::string>& stopwords) {
    std::vector<std::string> out;
    std::string cur;
    auto is_word_byte = [](unsigned char c) {
        return std::isalnum(c) || c >= 0x80;
    };
    auto flush = [&] {
        // trim apostrophes that ended up at the edges
        while (!cur.empty() && cur.front() == '\'') cur.erase(0, 1);
        while (!cur.empty() && cur.back() == '\'') cur.pop_back();
        if (!cur.empty() && !stopwords.count(cur)) out.push_back(cur);
        cur.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_word_byte(c)) {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
        } else if (c == '\'' && !cur.empty()) {
            cur.push_back('\'');
        } else if ((c == '#' || c == '@') && cur.empty()) {
            // prefix stripped, token retained
        } else {
            flush();
        }
    }
    flush();
    return out;
}

struct NBModel {
    double alpha = 1.0;
    double prior_control = 0.5, prior_rights = 0.5;
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> token_counts;  // token -> (control, rights)
    std::int64_t total_control = 0, total_rights = 0;

    std::size_t vocab_size() const { return token_counts.size(); }
};

// Multinomial NB with add-alpha smoothing. The majority class is
// undersampled (seeded) to the minority size, so priors come out 0.5/0.5.
inline NBModel train_nb(const std::map<std::string, TokenDoc>& docs,
                        const std::map<std::string, Side>& labels, double alpha, std::uint64_t seed) {
    std::vector<const TokenDoc*> control, rights;
    for (const auto& [uid, doc] : docs) {
        auto it = labels.find(uid);
        if (it == labels.end()) continue;
        if (it->second == Side::control) control.push_back(&doc);
        else if (it->second == Side::rights) rights.push_back(&doc);
    }
    if (control.empty() || rights.empty()) {
        throw std::invalid_argument("train_nb needs at least one user per class");
    }
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    auto undersample = [&](std::vector<const TokenDoc*>& v, std::size_t target) {
        std::shuffle(v.begin(), v.end(), rng);
        v.resize(target);
    };
    const std::size_t minority = std::min(control.size(), rights.size());
    if (control.size() > minority) undersample(control, minority);
    if (rights.size() > minority) undersample(rights, minority);

    NBModel m;
    m.alpha = alpha;
    for (const TokenDoc* d : control) {
        for (const auto& [tok, c] : d->tokens) {
            m.token_counts[tok].first += c;
            m.total_control += c;
        }
    }
    for (const TokenDoc* d : rights) {
        for (const auto& [tok, c] : d->tokens) {
            m.token_counts[tok].second += c;
            m.total_rights += c;
        }
    }
    return m;
}

// P(rights | doc) in log space; out-of-vocabulary tokens are ignored.
inline double nb_prob_rights(const NBModel& m, const TokenDoc& doc) {
    const double v = static_cast<double>(m.vocab_size());
    double log_c = std::log(m.prior_control);
    double log_r = std::log(m.prior_rights);
    for (const auto& [tok, c] : doc.tokens) {
        auto it = m.token_counts.find(tok);
        if (it == m.token_counts.end()) continue;
        double pc = (static_cast<double>(it->second.first) + m.alpha) /
                    (static_cast<double>(m.total_control) + m.alpha * v);
        double pr = (static_cast<double>(it->second.second) + m.alpha) /
                    (static_cast<double>(m.total_rights) + m.alpha * v);
        log_c += static_cast<double>(c) * std::log(pc);
        log_r += static_cast<double>(c) * std::log(pr);
    }
    double mx = std::max(log_c, log_r);
    double denom = std::exp(log_c - mx) + std::exp(log_r - mx);
    return std::exp(log_r - mx) / denom;
}

struct NBDecision {
    Side label = Side::unknown;
    double prob_rights = 0.5;
};

inline NBDecision classify_nb(const NBModel& m, const TokenDoc& doc, double threshold = 0.99) {
    if (threshold <= 0.5 || threshold > 1.0) throw std::invalid_argument("threshold must be in (0.5, 1]");
    NBDecision d;
    d.prob_rights = nb_prob_rights(m, doc);
    if (d.prob_rights >= threshold) d.label = Side::rights;
    else if (d.prob_rights <= 1.0 - threshold) d.label = Side::control;
    else d.label = Side::unknown;
    return d;
}

struct LogOddsEntry {
    double delta = 0;     // log-odds difference, positive favors corpus i
    double variance = 0;
    double z = 0;
};

using LogOddsResult = std::map<std::string, LogOddsEntry>;

// Monroe-style log-odds with informative Dirichlet prior. The prior mass
// alpha0 = prior_scale * background total, distributed proportionally to
// background frequencies.
inline LogOddsResult log_odds_dirichlet(const std::map<std::string, std::int64_t>& counts_i,
                                        const std::map<std::string, std::int64_t>& counts_j,
                                        const std::map<std::string, std::int64_t>& background,
                                        double prior_scale = 0.01) {
    double bg_total = 0;
    for (const auto& [tok, c] : background) bg_total += static_cast<double>(c);
    if (bg_total <= 0) throw std::invalid_argument("background corpus is empty");
    double n_i = 0, n_j = 0;
    for (const auto& [tok, c] : counts_i) n_i += static_cast<double>(c);
    for (const auto& [tok, c] : counts_j) n_j += static_cast<double>(c);
    if (n_i <= 0 || n_j <= 0) throw std::invalid_argument("both corpora must be non-empty");

    const double alpha0 = prior_scale * bg_total;
    std::set<std::string> vocab;
    for (const auto& [tok, c] : counts_i) vocab.insert(tok);
    for (const auto& [tok, c] : counts_j) vocab.insert(tok);

    LogOddsResult out;
    for (const std::string& tok : vocab) {
        auto bit = background.find(tok);
        if (bit == background.end()) {
            throw std::invalid_argument("token missing from background corpus: " + tok);
        }
        const double aw = alpha0 * static_cast<double>(bit->second) / bg_total;
        auto count_of = [&](const std::map<std::string, std::int64_t>& m) {
            auto it = m.find(tok);
            return it == m.end() ? 0.0 : static_cast<double>(it->second);
        };
        const double yi = count_of(counts_i), yj = count_of(counts_j);
        LogOddsEntry e;
        e.delta = std::log((yi + aw) / (n_i + alpha0 - yi - aw)) -
                  std::log((yj + aw) / (n_j + alpha0 - yj - aw));
        e.variance = 1.0 / (yi + aw) + 1.0 / (yj + aw);
        e.z = e.delta / std::sqrt(e.variance);
        out[tok] = e;
    }
    return out;
}

struct Lexicon {
    std::set<std::string> terms;                 // term-set form (hate lexicon)
    std::map<std::string, double> scores;        // scored form (sentiment)
    bool scored = false;

    // CSV: term[,score]; a score on any row makes the lexicon scored.
    static Lexicon from_csv(std::istream& in) {
        Lexicon lex;
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto f = split_csv_line(line);
            std::string term = to_lower(trim(f[0]));
            if (term.empty()) continue;
            lex.terms.insert(term);
            if (f.size() > 1) {
                if (auto v = parse_double(f[1])) {
                    lex.scores[term] = *v;
                    lex.scored = true;
                }
            }
        }
        return lex;
    }
};

// Fraction of the doc's tokens found in the term set; empty doc -> 0.
inline double lexicon_rate(const TokenDoc& doc, const Lexicon& lex) {
    if (doc.total == 0) return 0.0;
    std::int64_t hits = 0;
    for (const auto& [tok, c] : doc.tokens) {
        if (lex.terms.count(tok)) hits += c;
    }
    return static_cast<double>(hits) / static_cast<double>(doc.total);
}

// Mean score over matched tokens; no matches -> missing.
inline std::optional<double> sentiment_avg(const TokenDoc& doc, const Lexicon& lex) {
    double sum = 0;
    std::int64_t hits = 0;
    for (const auto& [tok, c] : doc.tokens) {
        auto it = lex.scores.find(tok);
        if (it == lex.scores.end()) continue;
        sum += it->second * static_cast<double>(c);
        hits += c;
    }
    if (hits == 0) return std::nullopt;
    return sum / static_cast<double>(hits);
}

struct CategoryDictionary {
    // category -> patterns; a trailing '*' makes a prefix pattern
    std::map<std::string, std::vector<std::string>> categories;

    // Sectioned text: "[category]" header, one pattern per line.
    static CategoryDictionary from_stream(std::istream& in) {
        CategoryDictionary d;
        std::string line, current;
        while (std::getline(in, line)) {
            std::string t = trim(line);
            if (t.empty() || t[0] == ';') continue;
            if (t.front() == '[' && t.back() == ']') {
                current = to_lower(trim(t.substr(1, t.size() - 2)));
                if (current.empty()) throw std::runtime_error("category dictionary: empty category name");
                d.categories[current];
            } else {
                if (current.empty()) throw std::runtime_error("category dictionary: pattern before any [category]");
                d.categories[current].push_back(to_lower(t));
            }
        }
        return d;
    }
};

inline bool matches_pattern(const std::string& token, const std::string& pattern) {
    if (!pattern.empty() && pattern.back() == '*') {
        return token.compare(0, pattern.size() - 1, pattern, 0, pattern.size() - 1) == 0;
    }
    return token == pattern;
}

// Per category, fraction of tokens matching any pattern; tokens may
// count toward multiple categories.
inline std::map<std::string, double> category_rates(const TokenDoc& doc, const CategoryDictionary& dict) {
    std::map<std::string, double> out;
    for (const auto& [cat, patterns] : dict.categories) {
        std::int64_t hits = 0;
        if (doc.total > 0) {
            for (const auto& [tok, c] : doc.tokens) {
                for (const auto& p : patterns) {
                    if (matches_pattern(tok, p)) {
                        hits += c;
                        break;
                    }
                }
            }
        }
        out[cat] = doc.total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(doc.total);
    }
    return out;
}

// Base-2 Shannon entropy of the normalized count distribution.
template <typename Map>
inline double shannon_entropy(const Map& counts) {
    double total = 0;
    for (const auto& [k, c] : counts) {
        if (c < 0) throw std::invalid_argument("negative count in entropy input");
        total += static_cast<double>(c);
    }
    if (total == 0) return 0.0;
    double h = 0;
    for (const auto& [k, c] : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / total;
        h -= p * std::log2(p);
    }
    return h;
}

}  // namespace stancekit
