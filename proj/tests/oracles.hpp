#pragma once

// Naive scalar-loop reimplementations of every loss, kept deliberately
// independent of the tensor/tape code path they are checked against.
// All take plain nested vectors.

#include <cmath>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

inline double safe_log(double x) {
    return std::log(x < 1e-12 ? 1e-12 : x);
}

inline std::vector<double> softmax(const std::vector<double>& v) {
    double mx = v[0];
    for (double x : v) {
        mx = mx > x ? mx : x;
    }
    std::vector<double> out(v.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        denom += out[i];
    }
    for (double& x : out) {
        x /= denom;
    }
    return out;
}

inline std::vector<double> normalize(const std::vector<double>& v) {
    double n = std::sqrt(dot(v, v));
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] / n;
    }
    return out;
}

// Softmax over cosine similarities to prototypes (prototype rows normalized).
inline Mat prototype_probs(const Mat& z, const Mat& protos) {
    Mat out;
    for (const auto& zi : z) {
        std::vector<double> sims;
        for (const auto& c : protos) {
            sims.push_back(dot(zi, normalize(c)));
        }
        out.push_back(softmax(sims));
    }
    return out;
}

inline double supcon(const Mat& z, const std::vector<int>& labels, double tau) {
    const int n = static_cast<int>(z.size());
    double total = 0.0;
    int anchors = 0;
    for (int i = 0; i < n; ++i) {
        std::vector<int> pos;
        for (int j = 0; j < n; ++j) {
            if (j != i && labels[j] == labels[i]) {
                pos.push_back(j);
            }
        }
        if (pos.empty()) {
            continue;
        }
        ++anchors;
        double denom = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j != i) {
                denom += std::exp(dot(z[i], z[j]) / tau);
            }
        }
        double anchor = 0.0;
        for (int p : pos) {
            anchor += -std::log(std::exp(dot(z[i], z[p]) / tau) / denom);
        }
        total += anchor / pos.size();
    }
    return anchors == 0 ? 0.0 : total / anchors;
}

inline double selfcon(const Mat& z, const Mat& z_aug, double tau, bool literal) {
    const int n = static_cast<int>(z.size());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double pos = std::exp(dot(z[i], z_aug[i]) / tau);
        double denom = 0.0;
        if (literal) {
            for (int j = 0; j < n; ++j) {
                denom += std::exp(dot(z[i], z[j]) / tau);
            }
        } else {
            for (int j = 0; j < n; ++j) {
                if (j != i) {
                    denom += std::exp(dot(z[i], z[j]) / tau);
                }
            }
            denom += pos;
        }
        total += -std::log(pos / denom);
    }
    return total / n;
}

inline double ce_labeled(const Mat& p, const std::vector<int>& labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        total += -safe_log(p[i][labels[i]]);
    }
    return total / p.size();
}

// Cross-entropy to a fixed target plus mean-prediction negative entropy.
inline double ce_with_regularizer(const Mat& p, const Mat& q) {
    const int n = static_cast<int>(p.size());
    const int k = static_cast<int>(p[0].size());
    double ce = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) {
            ce += -q[i][j] * safe_log(p[i][j]);
        }
    }
    ce /= n;
    double reg = 0.0;
    for (int j = 0; j < k; ++j) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) {
            mean += p[i][j];
        }
        mean /= n;
        reg += mean * safe_log(mean);
    }
    return ce + reg;
}

inline double ce_fixed_target(const Mat& p, const Mat& target) {
    const int n = static_cast<int>(p.size());
    double ce = 0.0;
    for (int i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p[i].size(); ++j) {
            ce += -target[i][j] * safe_log(p[i][j]);
        }
    }
    return ce / n;
}

inline double coarse_rep_labeled(const Mat& z, const std::vector<int>& labels) {
    const int n = static_cast<int>(z.size());
    double total = 0.0;
    int anchors = 0;
    for (int i = 0; i < n; ++i) {
        double sim = 0.0;
        int cnt = 0;
        for (int j = 0; j < n; ++j) {
            if (j != i && labels[j] == labels[i]) {
                sim += dot(z[i], z[j]);
                ++cnt;
            }
        }
        if (cnt == 0) {
            continue;
        }
        ++anchors;
        total += sim / cnt;
    }
    return anchors == 0 ? 0.0 : -total / anchors;
}

inline double coarse_rep_all(const Mat& z, const Mat& coarse_protos) {
    const int n = static_cast<int>(z.size());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> sims;
        for (const auto& c : coarse_protos) {
            sims.push_back(dot(z[i], normalize(c)));
        }
        const auto p = softmax(sims);
        int best = 0;
        for (std::size_t k = 1; k < p.size(); ++k) {
            if (p[k] > p[best]) {
                best = static_cast<int>(k);
            }
        }
        total += -p[best] * safe_log(p[best]);
    }
    return total / n;
}

// CE from coarse teacher to inferred-coarse predictions plus negative
// entropy of the mean inferred prediction.
inline double distill(const Mat& p_coarse, const Mat& p_t2c) {
    return ce_with_regularizer(p_t2c, p_coarse);
}

// Mean prediction entropy regularizer helper exposed for direct checks.
inline double mean_pred_neg_entropy(const Mat& p) {
    const int n = static_cast<int>(p.size());
    const int k = static_cast<int>(p[0].size());
    double reg = 0.0;
    for (int j = 0; j < k; ++j) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) {
            mean += p[i][j];
        }
        mean /= n;
        reg += mean * safe_log(mean);
    }
    return reg;
}

}  // namespace oracle
