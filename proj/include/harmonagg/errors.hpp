#pragma once

#include <stdexcept>
#include <string>

namespace harmonagg {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A chord symbol outside the 120-chord alphabet.
class UnknownChordError : public Error {
public:
    explicit UnknownChordError(const std::string& symbol)
        : Error("unknown chord symbol: '" + symbol + "'"), symbol_(symbol) {}
    const std::string& symbol() const noexcept { return symbol_; }

private:
    std::string symbol_;
};

// Malformed structured-text input (corpus lines, profile files).
class FormatError : public Error {
public:
    FormatError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class CorpusFormatError : public FormatError {
public:
    using FormatError::FormatError;
};

class EmptyCorpusError : public Error {
public:
    EmptyCorpusError() : Error("corpus contains no usable songs") {}
};

// A transition row with zero observed counts and no smoothing.
class DegenerateRowError : public Error {
public:
    explicit DegenerateRowError(int row)
        : Error("transition row " + std::to_string(row) +
                " has no counts and alpha = 0"),
          row_(row) {}
    int row() const noexcept { return row_; }

private:
    int row_;
};

class ZeroProbabilityTransitionError : public Error {
public:
    ZeroProbabilityTransitionError(int from, int to)
        : Error("transition " + std::to_string(from) + " -> " +
                std::to_string(to) + " has probability 0") {}
};

class VersionMismatchError : public Error {
public:
    explicit VersionMismatchError(const std::string& msg) : Error(msg) {}
};

class ChecksumError : public Error {
public:
    explicit ChecksumError(const std::string& msg) : Error(msg) {}
};

class LengthMismatchError : public Error {
public:
    LengthMismatchError(std::size_t expected, std::size_t got)
        : Error("sequence length mismatch: expected " +
                std::to_string(expected) + ", got " + std::to_string(got)) {}
};

class InvalidPartitionError : public Error {
public:
    explicit InvalidPartitionError(const std::string& msg) : Error(msg) {}
};

class UnassignedAgentError : public Error {
public:
    explicit UnassignedAgentError(int agent)
        : Error("agent " + std::to_string(agent) +
                " has no valid section assignment") {}
};

class BudgetExceededError : public Error {
public:
    explicit BudgetExceededError(const std::string& msg) : Error(msg) {}
};

class SequenceTooShortError : public Error {
public:
    explicit SequenceTooShortError(const std::string& msg) : Error(msg) {}
};

} // namespace harmonagg
