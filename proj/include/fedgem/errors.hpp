#pragma once

#include <stdexcept>
#include <string>

namespace fedgem {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Vectors of unequal dimension were combined.
class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

/// A value violated a type invariant (non-finite entry, bad weight, ...).
class InvalidValue : public Error {
public:
    explicit InvalidValue(const std::string& msg) : Error(msg) {}
};

/// A mixture component lost essentially all responsibility mass.
class EmptyComponent : public Error {
public:
    EmptyComponent(int component, const std::string& msg)
        : Error(msg), component_idx(component) {}
    int component_idx;
};

/// Two centroids coincide where a positive separation is required.
class DegenerateCentroids : public Error {
public:
    explicit DegenerateCentroids(const std::string& msg) : Error(msg) {}
};

/// Fewer distinct data points than requested seeds/clusters.
class DegenerateData : public Error {
public:
    explicit DegenerateData(const std::string& msg) : Error(msg) {}
};

/// Rejection sampling of blob centers exhausted its attempt budget.
class PlacementFailure : public Error {
public:
    explicit PlacementFailure(const std::string& msg) : Error(msg) {}
};

/// A metric is undefined for the given labeling (e.g. one cluster).
class UndefinedMetric : public Error {
public:
    explicit UndefinedMetric(const std::string& msg) : Error(msg) {}
};

/// Malformed run configuration (file or flags).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace fedgem
