#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gfh {

/// Input that violates a documented precondition or schema.
/// `where` carries a JSON path, a generator id or a sample location.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& message, std::string where = {})
        : std::runtime_error(message), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

/// An invariant of the library itself failed.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace gfh
