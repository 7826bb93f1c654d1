#include "hypertrace/facade.hpp"

int main(int argc, char** argv) { return hypertrace::cli(argc, argv); }
