#include <algorithm>
#include <cmath>
#include <limits>

#include "wbseg/error.hpp"
#include "wbseg/svm.hpp"

namespace wbseg {

namespace {

constexpr double kTau = 1e-12;

}  // namespace

SmoSolution smo_solve(const GramMatrix& gram, std::span<const std::size_t> rows,
                      std::span<const int> y, double C, const SmoOptions& options) {
  const std::size_t n = rows.size();
  if (y.size() != n) throw Error(ErrorCode::InvalidArgument, "label count differs from row count");
  if (!(C > 0.0)) throw Error(ErrorCode::InvalidArgument, "C must be positive");
  bool has_pos = false;
  bool has_neg = false;
  for (int label : y) {
    if (label == 1) has_pos = true;
    else if (label == -1) has_neg = true;
    else throw Error(ErrorCode::InvalidArgument, "binary labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) {
    throw Error(ErrorCode::SingleClassInput, "binary SVM needs both labels");
  }

  // Local copy of the selected kernel block keeps row access contiguous.
  std::vector<double> K(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    const double* src = gram.row(rows[a]);
    for (std::size_t b = 0; b < n; ++b) K[a * n + b] = src[rows[b]];
  }

  SmoSolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double>& alpha = sol.alpha;
  std::vector<double> G(n, -1.0);  // gradient of 1/2 a^T Q a - e^T a

  auto in_up = [&](std::size_t t) {
    return (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0.0);
  };
  auto in_low = [&](std::size_t t) {
    return (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < C);
  };

  std::size_t iter = 0;
  for (;; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * G[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    sol.max_violation = (i == n || j == n) ? 0.0 : gmax - gmin;
    if (i == n || j == n || gmax - gmin < options.tolerance) {
      sol.converged = true;
      break;
    }
    if (iter >= options.max_iterations) {
      sol.converged = false;
      break;
    }

    const double* Ki = &K[i * n];
    const double* Kj = &K[j * n];
    const double Qij = y[i] * y[j] * Ki[j];
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = Ki[i] + Kj[j] + 2.0 * Qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = Ki[i] + Kj[j] - 2.0 * Qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double dai = (alpha[i] - old_i) * y[i];
    const double daj = (alpha[j] - old_j) * y[j];
    for (std::size_t t = 0; t < n; ++t) G[t] += y[t] * (Ki[t] * dai + Kj[t] * daj);
  }
  sol.iterations = iter;

  // Bias from free vectors, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yG = y[t] * G[t];
    if (alpha[t] >= C) {
      if (y[t] == -1) ub = std::min(ub, yG);
      else lb = std::max(lb, yG);
    } else if (alpha[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yG);
      else lb = std::max(lb, yG);
    } else {
      ++n_free;
      sum_free += yG;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  sol.bias = -rho;

  double objective = 0.0;
  for (std::size_t t = 0; t < n; ++t) objective += alpha[t] * (G[t] - 1.0);
  sol.dual_objective = -0.5 * objective;
  return sol;
}

BinarySvmModel smo_train_binary(const FeatureMatrix& x, std::span<const int> y, double C,
                                const KernelSpec& kernel, const SmoOptions& options) {
  kernel.validate(x.dim());
  const GramMatrix gram(x, kernel);
  std::vector<std::size_t> rows(x.rows());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;

  BinarySvmModel model;
  model.kernel = kernel;
  model.C = C;
  model.solution = smo_solve(gram, rows, y, C, options);
  model.bias = model.solution.bias;
  model.support = FeatureMatrix(0, x.dim());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (model.solution.alpha[r] > 0.0) {
      model.support.append(x.row(r));
      model.coef.push_back(model.solution.alpha[r] * y[r]);
    }
  }
  return model;
}

double svm_decision(const BinarySvmModel& model, std::span<const float> f) {
  double s = model.bias;
  for (std::size_t r = 0; r < model.coef.size(); ++r) {
    s += model.coef[r] * kernel_eval(model.kernel, model.support.row(r), f);
  }
  return s;
}

}  // namespace wbseg
