#include <math.h>
#include <stdio.h>
#include "kapitza.h"

int main(void) {
    KwProblem *p = NULL;
    if (kw_problem_new(1.0, 2.0, &p) != KW_STATUS_OK) return 1;
    KwOrbit *o = NULL;
    if (kw_orbit_refine(p, KW_SYSTEM_AVERAGED, 3.1, 0.0, &o) != KW_STATUS_OK) return 2;
    KwOrbitInfo info;
    if (kw_orbit_info(o, &info) != KW_STATUS_OK) return 3;
    if (fabs(info.phi0 - M_PI) > 1e-8 || info.stability != KW_STABILITY_STABLE) return 4;
    kw_orbit_free(o);

    if (kw_problem_set_k(NULL, 3) != KW_STATUS_NULL_POINTER) return 5;
    char buf[128];
    if (kw_last_error_message(buf, sizeof buf) == 0) return 6;
    kw_problem_free(p);
    printf("ok %s\n", kw_version());
    return 0;
}
