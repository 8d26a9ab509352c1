#pragma once

#include <stdexcept>
#include <string>

namespace misciga {

/// Geometry map is degenerate or a point falls outside a patch.
class GeometryError : public std::runtime_error {
public:
    explicit GeometryError(const std::string& what) : std::runtime_error(what) {}
};

/// Galerkin assembly or factorization failed (indefinite/singular system).
class AssemblyError : public std::runtime_error {
public:
    explicit AssemblyError(const std::string& what) : std::runtime_error(what) {}
};

/// A multi-index set failed a structural requirement (downward closure).
class StructureError : public std::logic_error {
public:
    explicit StructureError(const std::string& what) : std::logic_error(what) {}
};

/// An integrand returned a non-finite value; the message names the node.
class EvaluationError : public std::runtime_error {
public:
    explicit EvaluationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace misciga
