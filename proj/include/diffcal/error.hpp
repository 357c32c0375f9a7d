#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diffcal {

/// Failure classes raised by the library. Each maps onto one CLI exit class
/// (see exit_code_for).
enum class ErrorKind {
    Range,              // index or cell outside the grid
    Domain,             // coordinate outside the RGB frame
    Shape,              // dimensions disagree with the sensor/frame config
    Consistency,        // two inputs that must agree do not
    Precondition,       // caller violated a documented precondition
    Invariant,          // internal invariant broken (bug or corrupt input)
    Config,             // invalid configuration value
    Parse,              // malformed text in a data file
    MissingFile,        // referenced path does not exist
    DuplicateIndex,     // scan index listed more than once
    IncompleteDataset,  // scan indices missing
    CountOverflow,      // histogram count above max_count
    NegativeCount,      // histogram count below zero
    NoSignal,           // background-subtracted signal is zero everywhere
    DegenerateMap,      // response map has no positive valid cell
    DegenerateInput,    // metric inputs have empty overlap or zero norm
    UndefinedIou,       // IoU of two empty masks
    InsufficientDetections,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Process exit codes used by the CLI.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int config = 2;
inline constexpr int validation = 3;
inline constexpr int degenerate = 4;
inline constexpr int io = 5;
}  // namespace exit_code

int exit_code_for(ErrorKind kind) noexcept;

}  // namespace diffcal
