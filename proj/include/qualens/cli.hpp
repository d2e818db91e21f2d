#ifndef QUALENS_CLI_HPP
#define QUALENS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace qualens {

/// Exit codes: 0 success, 1 parse or validation error, 2 I/O error,
/// 64 usage error, 70 internal error.
int cli_main(int argc, const char* const* argv);

/// Same, with explicit arguments (without the program name) and streams.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace qualens

#endif
