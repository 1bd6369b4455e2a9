#include "varwave/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace varwave {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::GammaOutOfRange: return "GammaOutOfRange";
    case ErrorCode::DenominatorNonpositive: return "DenominatorNonpositive";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::Condition215Violated: return "Condition215Violated";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::NotInBlowupRegion: return "NotInBlowupRegion";
    case ErrorCode::EmptyGamma0: return "EmptyGamma0";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularElement: return "SingularElement";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NewtonFailure: return "NewtonFailure";
    case ErrorCode::NoBoundaryNodes: return "NoBoundaryNodes";
    case ErrorCode::NegativeG: return "NegativeG";
    case ErrorCode::TooFewRecords: return "TooFewRecords";
    case ErrorCode::NonpositiveEnergy: return "NonpositiveEnergy";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

int worker_count() {
  static const int cached = [] {
    if (const char* env = std::getenv("VARWAVE_THREADS")) {
      const int n = std::atoi(env);
      if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
  }();
  return cached;
}

void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
  const int workers = worker_count();
  if (n <= 0) return;
  if (workers == 1 || n < 256) {
    fn(0, n);
    return;
  }
  const int chunks = std::min<std::int64_t>(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(chunks);
  const std::int64_t per = (n + chunks - 1) / chunks;
  for (int c = 0; c < chunks; ++c) {
    const std::int64_t lo = c * per;
    const std::int64_t hi = std::min<std::int64_t>(n, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace varwave
