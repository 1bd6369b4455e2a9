#ifndef VARWAVE_COMMON_HPP
#define VARWAVE_COMMON_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace varwave {

enum class ErrorCode {
  GammaOutOfRange,
  DenominatorNonpositive,
  DegenerateDenominator,
  Condition215Violated,
  EmptyWindow,
  NotInBlowupRegion,
  EmptyGamma0,
  NotPositiveDefinite,
  SingularElement,
  DimensionMismatch,
  NewtonFailure,
  NoBoundaryNodes,
  NegativeG,
  TooFewRecords,
  NonpositiveEnergy,
  ParseError,
  ValidationError,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

/// Worker cap for parallel sections; reads VARWAVE_THREADS once (>=1).
int worker_count();

/// Chunked parallel loop over [0, n). fn(begin, end) must be race-free
/// across disjoint ranges. Runs inline when n is small or one worker.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

/// Derive a stream-specific seed from the run seed (splitmix64 step).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace varwave

#endif
