from django.contrib import admin
from .models import ScenarioRun


class ScenarioRunAdmin(admin.ModelAdmin):
    model = ScenarioRun
    list_display = ('name', 'command', 'status', 'created_at', 'finished_at')
    list_filter = ('command', 'status')
    readonly_fields = ('created_at', 'finished_at')
    fieldsets = (
        (None, {'fields': ('name', 'command', 'status')}),
        ('Input', {'fields': ('scenario', 'options')}),
        ('Result', {'fields': ('summary', 'error', 'created_at', 'finished_at')}),
    )
    search_fields = ('name',)
    ordering = ('-created_at',)

admin.site.register(ScenarioRun, ScenarioRunAdmin)
