#pragma once

namespace strokeforge {

/// Exit codes: 0 success, 1 usage error, 2 processing error.
int cli_main(int argc, char** argv);

}  // namespace strokeforge
