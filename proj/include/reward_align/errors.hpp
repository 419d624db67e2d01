#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace reward_align {

/// Base class for every typed failure raised by the library. `code()` is a
/// stable machine-readable name used by the CLI error JSON and the HTTP API.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define REWARD_ALIGN_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& message) : Error(#Name, message) {}  \
  };

REWARD_ALIGN_DEFINE_ERROR(InvalidArgument)
REWARD_ALIGN_DEFINE_ERROR(InvalidData)
REWARD_ALIGN_DEFINE_ERROR(MissingRewardEntry)
REWARD_ALIGN_DEFINE_ERROR(EmptySupport)
REWARD_ALIGN_DEFINE_ERROR(UnknownTrajectory)
REWARD_ALIGN_DEFINE_ERROR(UnknownDistribution)
REWARD_ALIGN_DEFINE_ERROR(DuplicatePair)
REWARD_ALIGN_DEFINE_ERROR(PairMismatch)
REWARD_ALIGN_DEFINE_ERROR(DegenerateDenominator)
REWARD_ALIGN_DEFINE_ERROR(MissingPotential)
REWARD_ALIGN_DEFINE_ERROR(NonpositiveAlpha)
REWARD_ALIGN_DEFINE_ERROR(IdenticalStartDistributions)
REWARD_ALIGN_DEFINE_ERROR(MixedStartDistributions)
REWARD_ALIGN_DEFINE_ERROR(BucketUnsatisfiable)
REWARD_ALIGN_DEFINE_ERROR(InsufficientPool)
REWARD_ALIGN_DEFINE_ERROR(NotFound)
REWARD_ALIGN_DEFINE_ERROR(IoError)

#undef REWARD_ALIGN_DEFINE_ERROR

/// Raised when a preference dataset contains a cycle. `cycle()` lists the
/// distribution ids along the witness, first id repeated at the end.
class TransitivityViolation : public Error {
 public:
  TransitivityViolation(const std::string& message,
                        std::vector<std::string> cycle)
      : Error("TransitivityViolation", message), cycle_(std::move(cycle)) {}

  const std::vector<std::string>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

}  // namespace reward_align
