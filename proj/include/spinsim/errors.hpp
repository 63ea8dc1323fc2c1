#pragma once

#include <stdexcept>
#include <string>

namespace spinsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SPINSIM_ERROR_TYPE(Name, default_msg)                 \
  class Name : public Error {                                 \
   public:                                                    \
    Name() : Error(default_msg) {}                            \
    explicit Name(const std::string& msg) : Error(msg) {}     \
  };

SPINSIM_ERROR_TYPE(ZeroState, "spinor amplitudes are both zero")
SPINSIM_ERROR_TYPE(NoRFField, "operation requires a nonzero RF amplitude")
SPINSIM_ERROR_TYPE(NonUnitAxis, "rotation axis must have unit norm")
SPINSIM_ERROR_TYPE(DegenerateDelta, "effective frequency is zero")
SPINSIM_ERROR_TYPE(ZeroFrequency, "reference frequency must be nonzero")
SPINSIM_ERROR_TYPE(NonSquare, "matrix operand must be square")
SPINSIM_ERROR_TYPE(EmptyList, "operand list must be non-empty")
SPINSIM_ERROR_TYPE(LengthMismatch, "operand lists must have equal length")
SPINSIM_ERROR_TYPE(StepTooLarge, "integration step violates the stability guard")
SPINSIM_ERROR_TYPE(NonHermitianSample, "sampled Hamiltonian is not Hermitian")
SPINSIM_ERROR_TYPE(InvalidTiming, "sequence timing constraints violated")
SPINSIM_ERROR_TYPE(BadSize, "grid size must be a power of two >= 32")
SPINSIM_ERROR_TYPE(DimensionMismatch, "grid dimensions do not match")
SPINSIM_ERROR_TYPE(EmptyROI, "region of interest is empty")
SPINSIM_ERROR_TYPE(NoNoise, "noise region has zero standard deviation")

#undef SPINSIM_ERROR_TYPE

}  // namespace spinsim
