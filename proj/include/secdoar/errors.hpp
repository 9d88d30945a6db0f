#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace secdoar {

// Base class for all pipeline errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BadTimestamp : public Error {
public:
    using Error::Error;
};

class MappingMismatch : public Error {
public:
    using Error::Error;
};

// Raised when a normalized record fails validation; carries the violation list.
class NormalizationFailed : public Error {
public:
    NormalizationFailed(std::string msg, std::vector<std::string> violations)
        : Error(std::move(msg)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

class StoreUnavailable : public Error {
public:
    using Error::Error;
};

class UncoveredTool : public Error {
public:
    using Error::Error;
};

class UnboundPredicate : public Error {
public:
    using Error::Error;
};

class ConflictUnresolvable : public Error {
public:
    using Error::Error;
};

class DuplicateTool : public Error {
public:
    using Error::Error;
};

class UnknownKind : public Error {
public:
    using Error::Error;
};

class UnknownFeature : public Error {
public:
    using Error::Error;
};

class UnknownTool : public Error {
public:
    using Error::Error;
};

class CyclicTaxonomy : public Error {
public:
    using Error::Error;
};

class NoComposition : public Error {
public:
    using Error::Error;
};

class ZeroDenominator : public Error {
public:
    using Error::Error;
};

class IntervalOutOfHorizon : public Error {
public:
    using Error::Error;
};

class ChannelInactive : public Error {
public:
    using Error::Error;
};

class ChannelFull : public Error {
public:
    using Error::Error;
};

class CompositionInvalid : public Error {
public:
    using Error::Error;
};

class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

class InvalidInjection : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Wraps a failure with the pipeline stage it occurred in.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& msg)
        : Error("[" + stage + "] " + msg), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

} // namespace secdoar
