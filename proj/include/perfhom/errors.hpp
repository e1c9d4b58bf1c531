#pragma once

#include <stdexcept>
#include <string>

namespace perfhom {

// Error categories map onto CLI exit codes: validation -> 2, solver -> 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

class SolverError : public Error {
public:
    explicit SolverError(const std::string& msg) : Error(msg) {}
};

class BudgetError : public ValidationError {
public:
    explicit BudgetError(const std::string& msg) : ValidationError(msg) {}
};

} // namespace perfhom
