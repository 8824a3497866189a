/** Browser entry point: boot the app against the real document. */

import { AnnotatorApp } from "./app.js";

new AnnotatorApp(document).start();
