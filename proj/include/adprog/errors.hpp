#ifndef ADPROG_ERRORS_HPP
#define ADPROG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace adprog {

// Exit-code mapping used by the CLI: UsageError -> 1, DataError -> 2,
// NumericError -> 3.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace adprog

#endif
