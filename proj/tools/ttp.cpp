#include "ttp/cli.hpp"

int main(int argc, char** argv)
{
    return ttp::cli::run_cli(argc, argv);
}
