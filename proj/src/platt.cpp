#include <cmath>

#include "wbseg/error.hpp"
#include "wbseg/svm.hpp"

namespace wbseg {

double PlattCalibration::probability(double decision) const {
  const double z = A * decision + B;
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

// Newton's method with backtracking on the regularised cross-entropy
// (Lin, Lin & Weng's formulation of Platt scaling).
PlattCalibration platt_fit(std::span<const double> decisions, std::span<const int> labels) {
  const std::size_t n = decisions.size();
  if (labels.size() != n) throw Error(ErrorCode::InvalidArgument, "decision/label size mismatch");
  double n_pos = 0;
  double n_neg = 0;
  for (int y : labels) {
    if (y == 1) ++n_pos;
    else if (y == -1) ++n_neg;
    else throw Error(ErrorCode::InvalidArgument, "Platt labels must be +1 or -1");
  }
  if (n < 2 || n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::DegenerateLabels, "Platt fit needs both labels and two samples");
  }

  PlattCalibration cal{0.0, std::log((n_neg + 1.0) / (n_pos + 1.0))};
  bool constant = true;
  for (double d : decisions) {
    if (!std::isfinite(d)) throw Error(ErrorCode::NonFiniteValue, "non-finite decision value");
    if (d != decisions[0]) constant = false;
  }
  if (constant) return cal;

  const double hi = (n_pos + 1.0) / (n_pos + 2.0);
  const double lo = 1.0 / (n_neg + 2.0);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = labels[i] == 1 ? hi : lo;

  constexpr int kMaxIter = 100;
  constexpr double kMinStep = 1e-10;
  constexpr double kSigma = 1e-12;
  constexpr double kEps = 1e-5;

  auto objective = [&](double A, double B) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = decisions[i] * A + B;
      if (z >= 0.0) f += t[i] * z + std::log1p(std::exp(-z));
      else f += (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return f;
  };

  double A = cal.A;
  double B = cal.B;
  double fval = objective(A, B);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = decisions[i] * A + B;
      double p, q;
      if (z >= 0.0) {
        const double e = std::exp(-z);
        p = e / (1.0 + e);
        q = 1.0 / (1.0 + e);
      } else {
        const double e = std::exp(z);
        p = 1.0 / (1.0 + e);
        q = e / (1.0 + e);
      }
      const double d2 = p * q;
      h11 += decisions[i] * decisions[i] * d2;
      h22 += d2;
      h21 += decisions[i] * d2;
      const double d1 = t[i] - p;
      g1 += decisions[i] * d1;
      g2 += d1;
    }
    if (std::fabs(g1) < kEps && std::fabs(g2) < kEps) break;

    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;

    double step = 1.0;
    while (step >= kMinStep) {
      const double nA = A + step * dA;
      const double nB = B + step * dB;
      const double nf = objective(nA, nB);
      if (nf < fval + 0.0001 * step * gd) {
        A = nA;
        B = nB;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < kMinStep) break;
  }
  return {A, B};
}

}  // namespace wbseg
