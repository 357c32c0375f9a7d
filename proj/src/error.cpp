#include "diffcal/error.hpp"

namespace diffcal {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Range: return "range error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Consistency: return "consistency error";
    case ErrorKind::Precondition: return "precondition error";
    case ErrorKind::Invariant: return "invariant violation";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::MissingFile: return "missing file";
    case ErrorKind::DuplicateIndex: return "duplicate scan index";
    case ErrorKind::IncompleteDataset: return "incomplete dataset";
    case ErrorKind::CountOverflow: return "count above max_count";
    case ErrorKind::NegativeCount: return "negative count";
    case ErrorKind::NoSignal: return "no signal";
    case ErrorKind::DegenerateMap: return "degenerate map";
    case ErrorKind::DegenerateInput: return "degenerate input";
    case ErrorKind::UndefinedIou: return "undefined iou";
    case ErrorKind::InsufficientDetections: return "insufficient valid detections";
    case ErrorKind::Io: return "i/o error";
    }
    return "unknown error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Config:
        return exit_code::config;
    case ErrorKind::Range:
    case ErrorKind::Domain:
    case ErrorKind::Shape:
    case ErrorKind::Consistency:
    case ErrorKind::Precondition:
    case ErrorKind::Parse:
    case ErrorKind::MissingFile:
    case ErrorKind::DuplicateIndex:
    case ErrorKind::IncompleteDataset:
    case ErrorKind::CountOverflow:
    case ErrorKind::NegativeCount:
        return exit_code::validation;
    case ErrorKind::NoSignal:
    case ErrorKind::DegenerateMap:
    case ErrorKind::DegenerateInput:
    case ErrorKind::UndefinedIou:
    case ErrorKind::InsufficientDetections:
        return exit_code::degenerate;
    case ErrorKind::Io:
        return exit_code::io;
    case ErrorKind::Invariant:
        return exit_code::internal;
    }
    return exit_code::internal;
}

}  // namespace diffcal
