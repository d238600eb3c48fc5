#include <stdio.h>
#include "pita.h"

int main(void) {
    PitaProgram *prog = NULL;
    PitaResult *res = NULL;
    double v = 0.0;

    if (pita_program_parse("q :- a. q :- b. a:0.2. b:0.4.", PITA_MODE_IND_EXC, &prog) != PITA_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", pita_last_error());
        return 1;
    }
    if (pita_query(prog, "q", 0.0, &res) != PITA_STATUS_OK) {
        fprintf(stderr, "query: %s\n", pita_last_error());
        pita_program_free(prog);
        return 1;
    }
    for (size_t i = 0; i < pita_result_len(res); i++) {
        pita_result_value(res, i, &v);
        printf("%s\t%s\t%g\n", pita_result_atom(res, i), pita_result_text(res, i), v);
    }
    pita_result_free(res);
    pita_program_free(prog);
    return 0;
}
