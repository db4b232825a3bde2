#pragma once

#include <stdexcept>
#include <string>

namespace ipca {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define IPCA_DEFINE_ERROR(name)                                  \
  class name : public Error {                                    \
   public:                                                       \
    explicit name(const std::string& what) : Error(what) {}      \
  }

IPCA_DEFINE_ERROR(ParseError);           // malformed input file
IPCA_DEFINE_ERROR(InvalidMesh);          // degenerate triangle, bad index
IPCA_DEFINE_ERROR(LimitExceeded);        // guard against accidental huge inputs
IPCA_DEFINE_ERROR(DimensionMismatch);
IPCA_DEFINE_ERROR(SingularSystem);       // solver breakdown / non-convergence
IPCA_DEFINE_ERROR(DegenerateComponent);  // all score projections vanish
IPCA_DEFINE_ERROR(NotSymmetric);
IPCA_DEFINE_ERROR(NotPSD);
IPCA_DEFINE_ERROR(RankDeficientBasis);
IPCA_DEFINE_ERROR(InsufficientSamples);
IPCA_DEFINE_ERROR(IndexOutOfRange);
IPCA_DEFINE_ERROR(InvalidConfig);

#undef IPCA_DEFINE_ERROR

}  // namespace ipca
