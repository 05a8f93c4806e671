#include <math.h>
#include <stdio.h>
#include <string.h>

#include "bsymp.h"

#define CHECK(cond)                                                          \
    do {                                                                     \
        if (!(cond)) {                                                       \
            const char *e = bsymp_last_error();                              \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond,   \
                    e ? e : "no error");                                     \
            return 1;                                                        \
        }                                                                    \
    } while (0)

static const char *SCENARIO =
    "name = \"c-smoke\"\n"
    "[[chart]]\nname = \"T2\"\ntorus = [\"x\", \"y\"]\n"
    "[[field]]\nname = \"sigma\"\nkind = \"form\"\nchart = \"T2\"\ndegree = 2\n"
    "components = { \"x,y\" = \"1\" }\n"
    "[[task]]\nid = \"torus\"\nop = \"mapping_torus\"\n"
    "params = { sigma = \"sigma\", holonomy = \"identity\", filling = true }\n";

int main(void) {
    BsympScenario *s = NULL;
    CHECK(bsymp_scenario_parse(SCENARIO, &s) == BSYMP_STATUS_OK);
    size_t n = 0;
    CHECK(bsymp_scenario_task_count(s, &n) == BSYMP_STATUS_OK && n == 1);

    BsympRunOptions opts = {0};
    opts.grid = 5;
    BsympReport *r = NULL;
    CHECK(bsymp_run(s, &opts, &r) == BSYMP_STATUS_OK);
    bool passed = false;
    CHECK(bsymp_report_passed(r, &passed) == BSYMP_STATUS_OK && passed);
    double seam = -1.0;
    CHECK(bsymp_report_residual(r, "torus", "seam", &seam) == BSYMP_STATUS_OK && seam == 0.0);
    char *json = NULL;
    CHECK(bsymp_report_to_json(r, &json) == BSYMP_STATUS_OK && strstr(json, "\"passed\": true"));
    bsymp_string_free(json);
    bsymp_report_free(r);
    bsymp_scenario_free(s);

    BsympScenario *bad = NULL;
    CHECK(bsymp_scenario_parse("name = ", &bad) == BSYMP_STATUS_PARSE_ERROR && bad == NULL);
    CHECK(bsymp_last_error() != NULL);

    double x[6] = {0.0, 0.0, 1.0, 1e-9, 0.0, 0.0};
    double y[6];
    CHECK(bsymp_dehn_twist_apply(3, 1.0, false, x, y) == BSYMP_STATUS_OK);
    CHECK(fabs(y[2] + 1.0) < 1e-6);

    puts("ok");
    return 0;
}
