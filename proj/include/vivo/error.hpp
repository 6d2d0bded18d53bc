#pragma once

#include <stdexcept>
#include <string>

namespace vivo {

/// Raised for contract violations on public operations. The message is the
/// stable, user-facing diagnostic ("degenerate frame", "empty band", ...).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace vivo
