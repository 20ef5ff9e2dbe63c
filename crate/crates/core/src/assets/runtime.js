(function () {
  "use strict";

  var doc = document;
  var root = doc.documentElement;

  function banner(message) {
    var el = doc.createElement("div");
    el.className = "course-banner";
    el.setAttribute("role", "alert");
    el.textContent = message;
    doc.body.insertBefore(el, doc.body.firstChild);
  }

  var manifest;
  try {
    manifest = JSON.parse(doc.getElementById("course-manifest").textContent);
  } catch (e) {
    banner("Interactive features are unavailable (the course manifest is missing or invalid). The slides below remain readable.");
    return;
  }

  var storage = null;
  try {
    storage = window.localStorage;
  } catch (e) {
    storage = null;
  }

  function storageKey(id) {
    return "course:" + manifest.title + ":" + id;
  }

  function load(id) {
    if (!storage) return null;
    try {
      return storage.getItem(storageKey(id));
    } catch (e) {
      return null;
    }
  }

  function save(id, value) {
    if (!storage) return;
    try {
      storage.setItem(storageKey(id), value);
    } catch (e) {
      /* quota or privacy mode */
    }
  }

  root.classList.add("course-js");

  // ---- navigation -------------------------------------------------------

  var deck = doc.querySelector(".course-deck");
  var topSlides = Array.prototype.slice.call(deck.children).filter(function (el) {
    return el.classList.contains("course-slide");
  });

  function directBlocks(section) {
    return Array.prototype.slice.call(section.children).filter(function (el) {
      return el.classList.contains("course-block");
    });
  }

  function maxStep(section) {
    return directBlocks(section).reduce(function (max, el) {
      return Math.max(max, parseInt(el.getAttribute("data-step") || "0", 10));
    }, 0);
  }

  var views = [];
  topSlides.forEach(function (slide, slideIndex) {
    views.push({ slide: slideIndex, sub: 0, el: slide, top: slide, max: maxStep(slide) });
    Array.prototype.slice.call(slide.children).forEach(function (child) {
      if (child.classList.contains("course-subslide")) {
        views.push({
          slide: slideIndex,
          sub: parseInt(child.getAttribute("data-ordinal"), 10),
          el: child,
          top: slide,
          max: maxStep(child)
        });
      }
    });
  });

  var state = { view: 0, step: 0 };
  var position = doc.querySelector(".course-position");

  function render(enteredSlide) {
    var view = views[state.view];
    topSlides.forEach(function (slide) {
      var current = slide === view.top;
      slide.classList.toggle("current", current);
      slide.classList.toggle("on-sub", current && view.sub > 0);
    });
    views.forEach(function (v) {
      if (v.sub > 0) v.el.classList.toggle("current", v === view);
    });
    directBlocks(view.el).forEach(function (block) {
      var step = parseInt(block.getAttribute("data-step") || "0", 10);
      block.classList.toggle("revealed", step <= state.step);
    });
    if (enteredSlide) {
      Array.prototype.forEach.call(doc.querySelectorAll("audio.course-audio"), function (a) {
        if (!view.top.contains(a)) a.pause();
      });
      var audio = view.top.querySelector("audio.course-audio");
      if (audio && audio.preload === "none") {
        audio.preload = "auto";
        audio.load();
      }
    }
    if (position) {
      position.textContent = view.sub > 0
        ? (view.slide + "." + view.sub + " / " + (topSlides.length - 1))
        : (view.slide + " / " + (topSlides.length - 1));
    }
  }

  function next() {
    var before = views[state.view].top;
    if (state.step < views[state.view].max) {
      state.step += 1;
    } else if (state.view + 1 < views.length) {
      state.view += 1;
      state.step = 0;
    }
    render(views[state.view].top !== before);
    return snapshot();
  }

  function prev() {
    var before = views[state.view].top;
    if (state.step > 0) {
      state.step -= 1;
    } else if (state.view > 0) {
      state.view -= 1;
      state.step = views[state.view].max;
    }
    render(views[state.view].top !== before);
    return snapshot();
  }

  function snapshot() {
    var view = views[state.view];
    return { slide: view.slide, subslide: view.sub, step: state.step };
  }

  doc.addEventListener("keydown", function (event) {
    var tag = event.target && event.target.tagName;
    if (tag === "TEXTAREA" || tag === "INPUT") return;
    if (event.key === "ArrowRight" || event.key === "PageDown" || event.key === " ") {
      event.preventDefault();
      next();
    } else if (event.key === "ArrowLeft" || event.key === "PageUp") {
      event.preventDefault();
      prev();
    }
  });
  Array.prototype.forEach.call(doc.querySelectorAll("[data-nav]"), function (button) {
    button.addEventListener("click", function () {
      if (button.getAttribute("data-nav") === "next") next();
      else prev();
    });
  });

  // ---- interpreter ------------------------------------------------------

  var interpreter = { status: "Unloaded", promise: null };
  var PRELUDE = [
    "import base64, io, os",
    "os.environ.setdefault('MPLBACKEND', 'AGG')",
    "__course_images = []",
    "def display(*objs):",
    "    for obj in objs:",
    "        fig = obj.gcf() if hasattr(obj, 'gcf') else (obj if hasattr(obj, 'savefig') else None)",
    "        if fig is None:",
    "            print(repr(obj))",
    "            continue",
    "        buf = io.BytesIO()",
    "        fig.savefig(buf, format='png', bbox_inches='tight')",
    "        __course_images.append(base64.b64encode(buf.getvalue()).decode('ascii'))",
    "        if hasattr(obj, 'close'):",
    "            obj.close('all')"
  ].join("\n");

  function ensureInterpreter() {
    if (interpreter.promise) return interpreter.promise;
    interpreter.status = "Loading";
    interpreter.promise = new Promise(function (resolve, reject) {
      var script = doc.createElement("script");
      script.setAttribute("src", manifest.interpreter_url);
      script.onload = function () {
        if (typeof window.loadPyodide !== "function") {
          reject(new Error("the interpreter script did not define loadPyodide"));
          return;
        }
        window.loadPyodide().then(function (py) {
          return py.runPythonAsync(PRELUDE).then(function () { return py; });
        }).then(resolve, reject);
      };
      script.onerror = function () {
        reject(new Error("could not download the Python interpreter"));
      };
      doc.head.appendChild(script);
    }).then(function (py) {
      interpreter.status = "Ready";
      return py;
    }, function (err) {
      interpreter.status = "Failed";
      interpreter.promise = null;
      throw err;
    });
    return interpreter.promise;
  }

  function runCode(code, output, button) {
    button.disabled = true;
    output.className = "course-output";
    output.textContent = interpreter.status === "Ready" ? "Running..." : "Loading Python (first run only)...";
    var printed = [];
    ensureInterpreter().then(function (py) {
      py.setStdout({ batched: function (s) { printed.push(s); } });
      py.setStderr({ batched: function (s) { printed.push(s); } });
      return py.loadPackagesFromImports(code).then(function () {
        return py.runPythonAsync(code);
      }).then(function (result) {
        output.textContent = printed.join("\n");
        if (result !== undefined && result !== null) {
          var text = String(result);
          if (result && typeof result.destroy === "function") result.destroy();
          output.textContent += (output.textContent ? "\n" : "") + text;
        }
        var images = py.globals.get("__course_images");
        var list = images.toJs();
        images.clear();
        images.destroy();
        list.forEach(function (b64) {
          var img = doc.createElement("img");
          img.setAttribute("alt", "plot");
          img.setAttribute("src", "data" + ":image/png;base64," + b64);
          output.appendChild(img);
        });
      });
    }).catch(function (err) {
      output.className = "course-output course-error";
      output.textContent = printed.join("\n") + (printed.length ? "\n" : "") + String(err && err.message ? err.message : err);
      if (interpreter.status === "Failed") {
        var retry = doc.createElement("button");
        retry.type = "button";
        retry.textContent = "Retry";
        retry.addEventListener("click", function () { runCode(code, output, button); });
        output.appendChild(doc.createElement("br"));
        output.appendChild(retry);
      }
    }).then(function () {
      button.disabled = false;
    });
  }

  // ---- widgets ----------------------------------------------------------

  function editor(id, initial, cls) {
    var area = doc.createElement("textarea");
    area.className = cls;
    area.id = id + "-input";
    area.spellcheck = false;
    var stored = load(id);
    area.value = stored !== null ? stored : initial;
    area.rows = Math.max(3, Math.min(25, area.value.split("\n").length + 1));
    area.addEventListener("input", function () { save(id, area.value); });
    return area;
  }

  function codeWidget(host, id, initial) {
    var area = editor(id, initial, "course-code-editor");
    var run = doc.createElement("button");
    run.type = "button";
    run.id = id + "-run";
    run.className = "course-run";
    run.textContent = "Run";
    var output = doc.createElement("div");
    output.id = id + "-out";
    output.className = "course-output";
    output.setAttribute("aria-live", "polite");
    run.addEventListener("click", function () { runCode(area.value, output, run); });
    host.appendChild(area);
    host.appendChild(run);
    host.appendChild(output);
  }

  Array.prototype.forEach.call(doc.querySelectorAll(".course-input"), function (host) {
    var id = host.getAttribute("data-widget");
    if (host.getAttribute("data-kind") === "code") {
      codeWidget(host, id, "");
    } else {
      var area = editor(id, "", "course-text-input");
      area.placeholder = "Type your answer";
      host.appendChild(area);
    }
  });

  Array.prototype.forEach.call(doc.querySelectorAll(".course-runnable"), function (host) {
    var id = host.getAttribute("data-widget");
    var pre = host.querySelector("pre.course-src");
    var source = pre ? pre.textContent : "";
    if (pre) pre.hidden = true;
    codeWidget(host, id, source);
  });

  // ---- assistant --------------------------------------------------------

  var panel = doc.getElementById("course-assistant");
  if (panel && manifest.assistant && manifest.assistant.enabled) {
    var toggle = panel.querySelector(".course-assistant-toggle");
    var body = panel.querySelector(".course-assistant-body");
    var log = panel.querySelector(".course-assistant-log");
    var form = panel.querySelector("form");
    var question = form.querySelector("textarea");
    var history = [];

    toggle.addEventListener("click", function () {
      body.hidden = !body.hidden;
      if (!body.hidden) question.focus();
    });

    var bubble = function (role, text) {
      var el = doc.createElement("div");
      el.className = "course-msg course-msg-" + role;
      el.textContent = text;
      log.appendChild(el);
      log.scrollTop = log.scrollHeight;
      return el;
    };

    var extractReply = function (data) {
      if (typeof data === "string") return data;
      if (!data) return "";
      if (typeof data.reply === "string") return data.reply;
      if (typeof data.content === "string") return data.content;
      if (data.message && typeof data.message.content === "string") return data.message.content;
      if (data.choices && data.choices[0] && data.choices[0].message) return data.choices[0].message.content;
      return JSON.stringify(data);
    };

    var ask = function (text) {
      history.push({ role: "user", content: text });
      var answer = bubble("assistant", "...");
      var headers = { "Content-Type": "application/json" };
      var token = load("assistant-token");
      if (token) headers.Authorization = "Bearer " + token;
      fetch(manifest.assistant.endpoint, {
        method: "POST",
        headers: headers,
        body: JSON.stringify({ messages: history })
      }).then(function (resp) {
        if (!resp.ok) throw new Error("the assistant answered with HTTP " + resp.status);
        var type = resp.headers.get("content-type") || "";
        var finish = function (raw) {
          var reply = raw;
          if (type.indexOf("json") !== -1) {
            try { reply = extractReply(JSON.parse(raw)); } catch (e) { reply = raw; }
          }
          answer.textContent = reply;
          history.push({ role: "assistant", content: reply });
        };
        if (resp.body && resp.body.getReader && type.indexOf("json") === -1) {
          var reader = resp.body.getReader();
          var decoder = new TextDecoder();
          var raw = "";
          answer.textContent = "";
          var pump = function () {
            return reader.read().then(function (chunk) {
              if (chunk.done) { finish(raw); return; }
              raw += decoder.decode(chunk.value, { stream: true });
              answer.textContent = raw;
              return pump();
            });
          };
          return pump();
        }
        return resp.text().then(finish);
      }).catch(function (err) {
        history.pop();
        answer.className = "course-msg course-msg-error";
        answer.textContent = "Could not reach the assistant: " + err.message + " ";
        var retry = doc.createElement("button");
        retry.type = "button";
        retry.textContent = "Retry";
        retry.addEventListener("click", function () {
          log.removeChild(answer);
          ask(text);
        });
        answer.appendChild(retry);
      });
    };

    if (!manifest.assistant.endpoint) {
      bubble("notice", "The assistant is not configured for this course.");
      question.disabled = true;
      form.querySelector("button").disabled = true;
    }

    form.addEventListener("submit", function (event) {
      event.preventDefault();
      var text = question.value.trim();
      if (!text || !manifest.assistant.endpoint) return;
      question.value = "";
      bubble("user", text);
      ask(text);
    });
  }

  render(true);
  window.courseRuntime = {
    next: next,
    prev: prev,
    state: snapshot,
    interpreterStatus: function () { return interpreter.status; }
  };
})();
