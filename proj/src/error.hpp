#pragma once

#include <stdexcept>
#include <string>

namespace graydose {

enum class ErrorCode {
    invalid_parameter,
    io,
    parse,
    incompatible_grid,
    invalid_geometry,
    target_exceeds_resist,
    infeasible_target,
    bad_calibration,
    incomplete_calibration,
    insufficient_data,
    degenerate_geometry,
    degenerate_data,
    no_resonance,
    out_of_support,
    under_resolved,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace graydose
