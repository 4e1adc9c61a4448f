#pragma once

#include <stdexcept>
#include <string>

namespace pueguard {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Calibrated thresholds would break gamma0 < gamma1 < gamma2.
class OrderingViolation : public Error {
public:
    using Error::Error;
};

class EmptyDatabase : public Error {
public:
    EmptyDatabase() : Error("location database has no entries") {}
};

class NoReports : public Error {
public:
    NoReports() : Error("fusion requires at least one local report") {}
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

/// The outage set receives no probability flux, so recovery time is undefined.
class NoOutageFlux : public Error {
public:
    NoOutageFlux() : Error("outage states are unreachable under these rates") {}
};

/// Invalid scenario or configuration file content. Carries the offending key
/// and line when they are known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, std::string key = {}, int line = 0)
        : Error(what), key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    std::string key_;
    int line_;
};

}  // namespace pueguard
