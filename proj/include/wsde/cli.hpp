#pragma once

#include <iosfwd>

namespace wsde::cli {

/// Entry point of the `bench` tool. Returns the process exit code.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wsde::cli
