#include "twmr/cli.hpp"

int main(int argc, char** argv) { return twmr::parse_and_dispatch(argc, argv); }
