#include "advlin/cli.hpp"

int main(int argc, char** argv)
{
    return advlin::run_cli(argc, argv);
}
