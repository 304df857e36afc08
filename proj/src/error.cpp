#include "nnmf/error.hpp"

namespace nnmf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::duplicate_observation: return "duplicate_observation";
    case ErrorCode::empty_data: return "empty_data";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::index_range: return "index_range";
    case ErrorCode::format: return "format";
    case ErrorCode::version: return "version";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::shape: return "shape";
    case ErrorCode::numerical: return "numerical";
    case ErrorCode::training_diverged: return "training_diverged";
    case ErrorCode::all_runs_diverged: return "all_runs_diverged";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::config: return "config";
  }
  return "unknown";
}

}  // namespace nnmf
