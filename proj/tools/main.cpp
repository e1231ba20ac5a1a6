#include <iostream>

#include "pipeline.hpp"

int main(int argc, char** argv) { return liouville::cli::run_pipeline(argc, argv, std::cout, std::cerr); }
