#pragma once

#include <stdexcept>
#include <string>

namespace cscd {

/// Malformed or inconsistent input data (unsorted rows, unknown streams, gaps).
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint blob that cannot be restored (version, checksum, model mismatch).
class checkpoint_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cscd
