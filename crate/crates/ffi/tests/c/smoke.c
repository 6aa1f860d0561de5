/* SPDX-License-Identifier: Apache-2.0 */
#include <stdio.h>
#include <string.h>

#include "script_intent.h"

int main(void) {
    const char *xml =
        "<hierarchy><node class=\"android.widget.LinearLayout\">"
        "<node class=\"android.widget.Button\" content-desc=\"Go\"/>"
        "</node></hierarchy>";
    SiLayout *layout = NULL;
    if (si_layout_parse(xml, &layout) != SI_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", si_last_error());
        return 1;
    }
    size_t node = 0;
    if (si_layout_resolve(layout, "//android.widget.Button[@content-desc=\"Go\"]", &node) != SI_STATUS_OK) {
        fprintf(stderr, "resolve: %s\n", si_last_error());
        return 2;
    }
    char *xpath = NULL;
    if (si_layout_node_xpath(layout, node, &xpath) != SI_STATUS_OK) {
        return 3;
    }
    printf("%zu %s\n", node, xpath);
    si_string_free(xpath);
    si_layout_free(layout);
    if (si_layout_parse(NULL, &layout) != SI_STATUS_NULL_ARGUMENT || si_last_error() == NULL) {
        return 4;
    }
    return 0;
}
