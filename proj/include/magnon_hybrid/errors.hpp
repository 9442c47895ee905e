#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace magnon_hybrid {

// Base for every error raised by the library. Callers that only care about
// "something went wrong with the inputs" can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Network or model whose parameters admit no physical oscillation
// (non-positive squared frequency).
class NonPhysical : public Error {
public:
    using Error::Error;
};

// Quadratic boson Hamiltonian that is not bounded below.
class Instability : public Error {
public:
    Instability(const std::string& what, std::vector<std::size_t> offending_modes)
        : Error(what), offending_modes_(std::move(offending_modes)) {}

    // Mode indices (photons 0..N-1, magnon N) dominating the softest direction.
    const std::vector<std::size_t>& offending_modes() const noexcept { return offending_modes_; }

private:
    std::vector<std::size_t> offending_modes_;
};

class ResourceLimit : public Error {
public:
    using Error::Error;
};

class NoPeak : public Error {
public:
    using Error::Error;
};

class Degenerate : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent configuration document.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Unreadable or malformed data file.
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace magnon_hybrid
