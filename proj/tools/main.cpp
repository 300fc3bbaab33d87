#include "cli_app.hpp"

int main(int argc, char** argv) { return rtensor::cli::run(argc, argv); }
