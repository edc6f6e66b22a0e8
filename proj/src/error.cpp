#include "conec/error.hpp"

namespace conec {

MalformedLineError::MalformedLineError(const std::string& what, std::size_t line)
    : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace conec
