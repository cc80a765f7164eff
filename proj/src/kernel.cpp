#include <cmath>
#include <sstream>

#include "wbseg/error.hpp"
#include "wbseg/svm.hpp"

namespace wbseg {

void KernelSpec::validate(std::size_t dim) const {
  switch (kind) {
    case KernelKind::Linear:
      return;
    case KernelKind::Rbf:
      if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw Error(ErrorCode::InvalidArgument, "rbf kernel needs gamma > 0");
      }
      return;
    case KernelKind::Product:
      if (!(gamma1 > 0.0) || !(gamma2 > 0.0) || !std::isfinite(gamma1) || !std::isfinite(gamma2)) {
        throw Error(ErrorCode::InvalidArgument, "product kernel needs gamma1, gamma2 > 0");
      }
      if (dim < 4) {
        throw Error(ErrorCode::ProductKernelNeedsSpatial,
                    "product kernel needs modality and spatial features");
      }
      return;
  }
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case KernelKind::Linear: os << "linear"; break;
    case KernelKind::Rbf: os << "rbf(gamma=" << gamma << ")"; break;
    case KernelKind::Product: os << "product(gamma1=" << gamma1 << ", gamma2=" << gamma2 << ")"; break;
  }
  return os.str();
}

double kernel_eval(const KernelSpec& spec, std::span<const float> a, std::span<const float> b) {
  switch (spec.kind) {
    case KernelKind::Linear: {
      double s = 0.0;
      for (std::size_t d = 0; d < a.size(); ++d) s += static_cast<double>(a[d]) * b[d];
      return s;
    }
    case KernelKind::Rbf: {
      double s = 0.0;
      for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = static_cast<double>(a[d]) - b[d];
        s += diff * diff;
      }
      return std::exp(-spec.gamma * s);
    }
    case KernelKind::Product: {
      const std::size_t split = a.size() - 3;
      double sm = 0.0;
      double ss = 0.0;
      for (std::size_t d = 0; d < split; ++d) {
        const double diff = static_cast<double>(a[d]) - b[d];
        sm += diff * diff;
      }
      for (std::size_t d = split; d < a.size(); ++d) {
        const double diff = static_cast<double>(a[d]) - b[d];
        ss += diff * diff;
      }
      return std::exp(-spec.gamma1 * sm - spec.gamma2 * ss);
    }
  }
  return 0.0;
}

GramMatrix::GramMatrix(const FeatureMatrix& x, const KernelSpec& spec)
    : n_(x.rows()), values_(x.rows() * x.rows()) {
  spec.validate(x.dim());
  for (std::size_t i = 0; i < n_; ++i) {
    values_[i * n_ + i] = kernel_eval(spec, x.row(i), x.row(i));
    for (std::size_t j = i + 1; j < n_; ++j) {
      const double k = kernel_eval(spec, x.row(i), x.row(j));
      values_[i * n_ + j] = k;
      values_[j * n_ + i] = k;
    }
  }
}

}  // namespace wbseg
