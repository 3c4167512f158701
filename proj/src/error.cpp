#include "mctsteg/error.hpp"

namespace mctsteg {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::Io: return "io";
    case Errc::UnsupportedFormat: return "unsupported_format";
    case Errc::MalformedHeader: return "malformed_header";
    case Errc::Truncated: return "truncated";
    case Errc::MaxvalTooLarge: return "maxval_too_large";
    case Errc::BadMagic: return "bad_magic";
    case Errc::InvalidValue: return "invalid_value";
    case Errc::DomainMismatch: return "domain_mismatch";
    case Errc::DimensionMismatch: return "dimension_mismatch";
    case Errc::InfeasiblePayload: return "infeasible_payload";
    case Errc::NonConvergence: return "non_convergence";
    case Errc::InvalidArgument: return "invalid_argument";
    case Errc::IncompletePath: return "incomplete_path";
    case Errc::DegenerateData: return "degenerate_data";
    case Errc::Protocol: return "protocol";
    case Errc::Timeout: return "timeout";
    case Errc::Environment: return "environment";
    case Errc::Config: return "config";
  }
  return "unknown";
}

}  // namespace mctsteg
