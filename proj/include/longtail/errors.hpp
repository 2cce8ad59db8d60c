#pragma once

#include <stdexcept>
#include <string>

namespace longtail {

// Bad or inconsistent input data (files, manifests, id mismatches).
// Maps to CLI exit code 2.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure (divergence, non-finite values). CLI exit code 3.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace longtail
