"""MiniLang: a small C-style reference language.

Grammar (``{}`` = repetition, ``[]`` = optional)::

    program   := { function | statement }
    function  := "fn" IDENT "(" [IDENT {"," IDENT}] ")" block
    block     := "{" { function | statement } "}"
    statement := IDENT "=" expr ";"
               | "if" "(" expr ")" block ["else" (block | if-statement)]
               | "while" "(" expr ")" block
               | "for" "(" [assign] ";" [expr] ";" [assign] ")" block
               | "return" [expr] ";" | "break" ";" | "continue" ";"
               | expr ";"
    expr      := binary operators (|| && == != < <= > >= + - * / %), unary
                 (- !), calls, identifiers, number/string/boolean literals

Comments (``//`` and ``/* */``) become ``Comment`` leaves placed in the
enclosing statement list right after the statement they appeared in.
"""

from __future__ import annotations

import re

from jitdp.syntax.nodes import AstNode


class ParseFailed(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\|\||&&|==|!=|<=|>=|[-+*/%<>=!(){};,])
    """,
    re.VERBOSE | re.DOTALL,
)

KEYWORDS = {"fn", "if", "else", "while", "for", "return", "break", "continue", "true", "false"}

# binding power of binary operators, loosest first
_PRECEDENCE = [("||",), ("&&",), ("==", "!="), ("<", "<=", ">", ">="), ("+", "-"), ("*", "/", "%")]


class Token:
    __slots__ = ("type", "text", "line", "column", "end_line")

    def __init__(self, type_, text, line, column, end_line):
        self.type = type_
        self.text = text
        self.line = line
        self.column = column
        self.end_line = end_line

    def __repr__(self):
        return f"Token({self.type}, {self.text!r}, {self.line}:{self.column})"


def tokenize(source: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            if source.startswith("/*", pos):
                raise ParseFailed("unterminated comment", line, pos - line_start + 1)
            if source[pos] == '"':
                raise ParseFailed("unterminated string", line, pos - line_start + 1)
            raise ParseFailed(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        text = match.group()
        column = pos - line_start + 1
        newlines = text.count("\n")
        if kind == "nl":
            line += 1
            line_start = match.end()
        elif kind != "ws":
            if kind == "ident" and text in KEYWORDS:
                kind = text
            elif kind == "op":
                kind = text
            tokens.append(Token(kind, text, line, column, line + newlines))
            if newlines:
                line += newlines
                line_start = pos + text.rfind("\n") + 1
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1, line))
    return tokens


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0
        self.pending_comments: list[AstNode] = []
        self.n_lines = source.count("\n") + (0 if source.endswith("\n") or not source else 1)

    # token helpers -------------------------------------------------------

    def _skip_comments(self):
        while self.tokens[self.pos].type in ("line_comment", "block_comment"):
            tok = self.tokens[self.pos]
            self.pending_comments.append(
                AstNode("Comment", tok.text, line_span=(tok.line, tok.end_line))
            )
            self.pos += 1

    def peek(self) -> Token:
        self._skip_comments()
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, type_: str) -> Token:
        tok = self.peek()
        if tok.type != type_:
            found = "end of input" if tok.type == "eof" else repr(tok.text)
            raise ParseFailed(f"expected {type_!r}, found {found}", tok.line, tok.column)
        return self.advance()

    def accept(self, type_: str):
        if self.peek().type == type_:
            return self.advance()
        return None

    def _last_line(self) -> int:
        return self.tokens[self.pos - 1].end_line if self.pos else 1

    # grammar -------------------------------------------------------------

    def parse_program(self) -> AstNode:
        children = self._statement_list(until="eof")
        self._flush_comments(children)
        return AstNode("Program", children=children, line_span=(1, max(1, self.n_lines)))

    def _flush_comments(self, into: list):
        into.extend(self.pending_comments)
        self.pending_comments = []

    def _statement_list(self, until: str) -> list[AstNode]:
        items = []
        while True:
            tok = self.peek()
            self._flush_comments(items)
            if tok.type == until:
                return items
            if tok.type == "eof":
                raise ParseFailed("unbalanced '{': missing '}'", tok.line, tok.column)
            if tok.type == "fn":
                items.append(self.parse_function())
            else:
                items.append(self.parse_statement())
            self.peek()
            self._flush_comments(items)

    def parse_function(self) -> AstNode:
        start = self.expect("fn").line
        name = self.expect("ident").text
        self.expect("(")
        params = []
        if self.peek().type != ")":
            while True:
                tok = self.expect("ident")
                params.append(AstNode("Param", tok.text, line_span=(tok.line, tok.line)))
                if not self.accept(","):
                    break
        self.expect(")")
        body = self.parse_block()
        return AstNode("Function", name, params + [body], (start, body.line_span[1]))

    def parse_block(self) -> AstNode:
        start = self.expect("{").line
        items = self._statement_list(until="}")
        end = self.expect("}").line
        return AstNode("Block", children=items, line_span=(start, end))

    def parse_statement(self) -> AstNode:
        tok = self.peek()
        kind = tok.type
        if kind == "if":
            return self.parse_if()
        if kind == "while":
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            body = self.parse_block()
            return AstNode("While", children=[cond, body], line_span=(tok.line, body.line_span[1]))
        if kind == "for":
            return self.parse_for()
        if kind == "return":
            self.advance()
            children = [] if self.peek().type == ";" else [self.parse_expr()]
            self.expect(";")
            return AstNode("Return", children=children, line_span=(tok.line, self._last_line()))
        if kind in ("break", "continue"):
            self.advance()
            self.expect(";")
            return AstNode(kind.capitalize(), line_span=(tok.line, self._last_line()))
        if kind == "}":
            raise ParseFailed("unbalanced '}'", tok.line, tok.column)
        if kind == "ident" and self._lookahead_type(1) == "=":
            node = self.parse_assign()
        else:
            expr = self.parse_expr()
            node = AstNode("ExprStmt", children=[expr], line_span=(tok.line, self._last_line()))
        self.expect(";")
        node.line_span = (tok.line, self._last_line())
        return node

    def _lookahead_type(self, offset: int) -> str:
        self._skip_comments()
        idx = self.pos
        seen = 0
        while True:
            idx += 1
            if self.tokens[idx].type in ("line_comment", "block_comment"):
                continue
            seen += 1
            if seen == offset or self.tokens[idx].type == "eof":
                return self.tokens[idx].type

    def parse_assign(self) -> AstNode:
        target = self.expect("ident")
        self.expect("=")
        value = self.parse_expr()
        return AstNode(
            "Assign",
            "=",
            [AstNode("Identifier", target.text, line_span=(target.line, target.line)), value],
            (target.line, self._last_line()),
        )

    def parse_if(self) -> AstNode:
        start = self.expect("if").line
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        children = [cond, self.parse_block()]
        if self.accept("else"):
            children.append(self.parse_if() if self.peek().type == "if" else self.parse_block())
        return AstNode("If", children=children, line_span=(start, children[-1].line_span[1]))

    def parse_for(self) -> AstNode:
        start = self.expect("for").line
        self.expect("(")
        parts = []
        for closer in (";", ";", ")"):
            tok = self.peek()
            if tok.type == closer:
                parts.append(AstNode("Empty", line_span=(tok.line, tok.line)))
            elif closer == ";" and len(parts) == 1:
                parts.append(self.parse_expr())
            else:
                parts.append(self.parse_assign())
            self.expect(closer)
        body = self.parse_block()
        return AstNode("For", children=parts + [body], line_span=(start, body.line_span[1]))

    def parse_expr(self, level: int = 0) -> AstNode:
        if level == len(_PRECEDENCE):
            return self.parse_unary()
        left = self.parse_expr(level + 1)
        while self.peek().type in _PRECEDENCE[level]:
            op = self.advance().text
            right = self.parse_expr(level + 1)
            left = AstNode(
                "BinaryOp", op, [left, right], (left.line_span[0], right.line_span[1])
            )
        return left

    def parse_unary(self) -> AstNode:
        tok = self.peek()
        if tok.type in ("-", "!"):
            self.advance()
            operand = self.parse_unary()
            return AstNode("UnaryOp", tok.text, [operand], (tok.line, operand.line_span[1]))
        return self.parse_primary()

    def parse_primary(self) -> AstNode:
        tok = self.advance()
        span = (tok.line, tok.line)
        if tok.type == "number":
            return AstNode("NumberLit", tok.text, line_span=span)
        if tok.type == "string":
            return AstNode("StringLit", tok.text, line_span=span)
        if tok.type in ("true", "false"):
            return AstNode("BoolLit", tok.text, line_span=span)
        if tok.type == "(":
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if tok.type == "ident":
            if self.peek().type == "(":
                self.advance()
                args = []
                if self.peek().type != ")":
                    while True:
                        args.append(self.parse_expr())
                        if not self.accept(","):
                            break
                end = self.expect(")").line
                return AstNode("Call", tok.text, args, (tok.line, end))
            return AstNode("Identifier", tok.text, line_span=span)
        found = "end of input" if tok.type == "eof" else repr(tok.text)
        raise ParseFailed(f"unexpected {found}", tok.line, tok.column)


def parse_minilang(source: str) -> AstNode:
    return Parser(source).parse_program()
