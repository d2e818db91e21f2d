#include "qualens/cli.hpp"

int main(int argc, char** argv)
{
    return qualens::cli_main(argc, argv);
}
