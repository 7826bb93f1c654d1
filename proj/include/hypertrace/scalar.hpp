#pragma once

#include <cmath>

namespace hypertrace {

// Elementary functions for the scalar types the kernels are instantiated on.
// A specialization for another type (the tests add __float128) must be
// visible before the first kernel instantiation that uses it.
template <class T>
struct ScalarOps {
  static T sqrt(T x) { return std::sqrt(x); }
  static T cosh(T x) { return std::cosh(x); }
  static T sinh(T x) { return std::sinh(x); }
  static T log(T x) { return std::log(x); }
  static T exp(T x) { return std::exp(x); }
  static T abs(T x) { return std::fabs(x); }
  static T asinh(T x) { return std::asinh(x); }
};

}  // namespace hypertrace
