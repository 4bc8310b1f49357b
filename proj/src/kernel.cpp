#include "locem/kernel.hpp"

#include <cmath>

namespace locem {

double KernelSpec::operator()(const Eigen::Ref<const Vector>& a,
                              const Eigen::Ref<const Vector>& b) const {
  switch (kind) {
    case Kind::gaussian:
      return from_sq_dist((a - b).squaredNorm());
    case Kind::linear:
      return a.dot(b);
    case Kind::polynomial:
      return from_inner(a.dot(b));
  }
  throw std::logic_error("unreachable kernel kind");
}

double KernelSpec::from_sq_dist(double sq_dist) const {
  if (kind != Kind::gaussian) throw std::logic_error("from_sq_dist: gaussian kernels only");
  return std::exp(-sq_dist / (2.0 * bandwidth * bandwidth));
}

double KernelSpec::from_inner(double inner) const {
  switch (kind) {
    case Kind::linear:
      return inner;
    case Kind::polynomial:
      return std::pow(inner + offset, degree);
    case Kind::gaussian:
      throw std::logic_error("from_inner: gaussian kernel needs the squared distance");
  }
  throw std::logic_error("unreachable kernel kind");
}

KernelSpec KernelSpec::gaussian(double bandwidth) {
  if (bandwidth <= 0) throw std::invalid_argument("gaussian kernel: bandwidth must be positive");
  KernelSpec k;
  k.kind = Kind::gaussian;
  k.bandwidth = bandwidth;
  k.bound = 1.0;
  return k;
}

KernelSpec KernelSpec::polynomial(int degree, double offset) {
  if (degree < 1) throw std::invalid_argument("polynomial kernel: degree must be >= 1");
  if (offset < 0) throw std::invalid_argument("polynomial kernel: offset must be >= 0");
  KernelSpec k;
  k.kind = Kind::polynomial;
  k.degree = degree;
  k.offset = offset;
  return k;
}

KernelSpec KernelSpec::linear() {
  KernelSpec k;
  k.kind = Kind::linear;
  return k;
}

}  // namespace locem
